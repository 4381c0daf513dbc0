// swag — style transfer engine and activation diagnostics.
//
// Subcommands: stylize, probe, tracks, reconstruct, synthesize, replay.
// Every run writes a manifest.json capturing the resolved configuration and
// input hashes; `swag replay` re-runs a manifest and reproduces its outputs
// byte for byte. Exit codes: 0 ok, 2 usage/config, 3 numeric fault, 4 I/O.
// SWAG_PRECISION={f32,f64} selects the scalar type (default f32).

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "swag/swag.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CsvWriter {
    std::ofstream out;

    explicit CsvWriter(const std::string& path) : out(path, std::ios::trunc) {
        if (!out) throw swag::IoError("cannot open " + path + " for writing");
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ',';
            out << cells[i];
        }
        out << '\n';
    }
    ~CsvWriter() { out.flush(); }
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string precision_from_env() {
    const char* env = std::getenv("SWAG_PRECISION");
    if (!env) return "f32";
    const std::string p(env);
    if (p != "f32" && p != "f64")
        throw swag::ConfigError("SWAG_PRECISION must be f32 or f64, got " + p);
    return p;
}

// Resolved once at startup; a replay overrides it with the manifest's value.
std::string g_precision = "f32";

swag::ImageBuffer load_sized(const std::string& path, int w, int h) {
    swag::ImageBuffer img = swag::load_image(path);
    return swag::resize(img, w, h, swag::ResizeMode::bilinear);
}

std::pair<int, int> parse_size(const std::string& s) {
    const auto x = s.find('x');
    if (x == std::string::npos) throw swag::ConfigError("--size expects WxH, got " + s);
    try {
        const int w = std::stoi(s.substr(0, x));
        const int h = std::stoi(s.substr(x + 1));
        if (w < 1 || h < 1) throw swag::ConfigError("--size dims must be >= 1");
        return {w, h};
    } catch (const std::exception&) {
        throw swag::ConfigError("--size expects WxH, got " + s);
    }
}

// Common knobs shared by the synthesis subcommands; mirrors the manifest's
// "config" object one to one.
struct CommonOpts {
    std::string arch = "resnet50";
    std::string arch_json;
    std::string weights;
    double width_scale = 0.25;
    int widen_factor = 0;  // 0 = preset default
    std::string size = "128x128";
    std::uint64_t seed = 0;
    int steps = 300;
    bool swag = false;
    double alpha = 1.0;
    double beta = -1.0;  // <0 = per-arch default
    double temperature = 1.0;
    std::string optimizer = "adam";
    double lr = -1.0;  // <0 = per-mode default
    std::string init = "content";
    int snapshot_every = 0;
    bool no_clamp = false;
};

void add_common_flags(CLI::App* cmd, CommonOpts& o, bool with_optim) {
    cmd->add_option("--arch", o.arch, "architecture preset name");
    cmd->add_option("--arch-json", o.arch_json, "architecture description JSON file");
    cmd->add_option("--weights", o.weights, "imported weight bundle");
    cmd->add_option("--width-scale", o.width_scale, "channel width multiplier in (0,1]");
    cmd->add_option("--widen-factor", o.widen_factor, "widening factor override");
    cmd->add_option("--size", o.size, "working resolution WxH");
    cmd->add_option("--seed", o.seed, "seed for weights, noise and sampling");
    if (with_optim) {
        cmd->add_option("--steps", o.steps, "optimization steps");
        cmd->add_flag("--swag", o.swag, "use the softmax-smoothed losses");
        cmd->add_option("--alpha", o.alpha, "content weight");
        cmd->add_option("--beta", o.beta, "style weight (default per architecture)");
        cmd->add_option("--temperature", o.temperature, "smoothing temperature");
        cmd->add_option("--optimizer", o.optimizer, "adam or lbfgs");
        cmd->add_option("--lr", o.lr, "adam learning rate (default per loss mode)");
        cmd->add_option("--init", o.init, "content or noise");
        cmd->add_option("--snapshot-every", o.snapshot_every, "snapshot interval");
        cmd->add_flag("--no-clamp", o.no_clamp, "skip per-step pixel range projection");
    }
}

json common_to_json(const CommonOpts& o) {
    json j;
    j["arch"] = o.arch;
    j["arch_json"] = o.arch_json;
    j["weights"] = o.weights;
    j["width_scale"] = o.width_scale;
    j["widen_factor"] = o.widen_factor;
    j["size"] = o.size;
    j["seed"] = o.seed;
    j["steps"] = o.steps;
    j["swag"] = o.swag;
    j["alpha"] = o.alpha;
    j["beta"] = o.beta;
    j["temperature"] = o.temperature;
    j["optimizer"] = o.optimizer;
    j["lr"] = o.lr;
    j["init"] = o.init;
    j["snapshot_every"] = o.snapshot_every;
    j["no_clamp"] = o.no_clamp;
    return j;
}

CommonOpts common_from_json(const json& j) {
    CommonOpts o;
    o.arch = j.value("arch", o.arch);
    o.arch_json = j.value("arch_json", o.arch_json);
    o.weights = j.value("weights", o.weights);
    o.width_scale = j.value("width_scale", o.width_scale);
    o.widen_factor = j.value("widen_factor", o.widen_factor);
    o.size = j.value("size", o.size);
    o.seed = j.value("seed", o.seed);
    o.steps = j.value("steps", o.steps);
    o.swag = j.value("swag", o.swag);
    o.alpha = j.value("alpha", o.alpha);
    o.beta = j.value("beta", o.beta);
    o.temperature = j.value("temperature", o.temperature);
    o.optimizer = j.value("optimizer", o.optimizer);
    o.lr = j.value("lr", o.lr);
    o.init = j.value("init", o.init);
    o.snapshot_every = j.value("snapshot_every", o.snapshot_every);
    o.no_clamp = j.value("no_clamp", o.no_clamp);
    return o;
}

swag::ArchSpec resolve_arch(const CommonOpts& o) {
    swag::ArchSpec spec =
        o.arch_json.empty() ? swag::preset(o.arch) : swag::load_arch(o.arch_json);
    spec.width_scale = o.width_scale;
    if (o.widen_factor > 0) spec.widen_factor = o.widen_factor;
    swag::validate_arch(spec);
    return spec;
}

template <typename S>
swag::Network<S> resolve_network(const CommonOpts& o) {
    const swag::ArchSpec spec = resolve_arch(o);
    if (!o.weights.empty()) return swag::load_bundle<S>(o.weights, spec);
    return swag::init_random<S>(spec, o.seed);
}

template <typename S>
std::pair<swag::LossConfig, swag::OptimConfig> resolve_optim(const CommonOpts& o,
                                                             const swag::ArchSpec& spec) {
    swag::LossConfig lc;
    lc.alpha = o.alpha;
    lc.beta = o.beta >= 0 ? o.beta : swag::default_beta(spec.name);
    lc.swag = o.swag;
    lc.temperature = o.temperature;

    swag::OptimConfig oc;
    oc.seed = o.seed;
    oc.steps = o.steps;
    if (o.optimizer == "adam")
        oc.optimizer = swag::OptimizerKind::adam;
    else if (o.optimizer == "lbfgs")
        oc.optimizer = swag::OptimizerKind::lbfgs;
    else
        throw swag::ConfigError("unknown optimizer: " + o.optimizer);
    oc.adam.lr = o.lr >= 0 ? o.lr : swag::default_adam_lr(o.swag);
    if (o.init == "content")
        oc.init = swag::InitKind::content;
    else if (o.init == "noise")
        oc.init = swag::InitKind::noise;
    else
        throw swag::ConfigError("unknown init: " + o.init);
    oc.snapshot_every = o.snapshot_every;
    oc.clamp = !o.no_clamp;
    return {lc, oc};
}

void write_loss_csv(const std::string& path, const std::vector<swag::LossRow>& rows) {
    CsvWriter csv(path);
    csv.row({"step", "total", "content", "style"});
    for (const auto& r : rows)
        csv.row({std::to_string(r.step), fmt(r.total), fmt(r.content), fmt(r.style)});
}

template <typename S>
std::vector<std::string> write_run_outputs(const std::string& out_dir,
                                           const swag::RunRecord<S>& rec) {
    std::vector<std::string> outputs;
    swag::save_ppm(out_dir + "/final.ppm", swag::denormalize(rec.final_image));
    outputs.push_back("final.ppm");
    write_loss_csv(out_dir + "/loss.csv", rec.losses);
    outputs.push_back("loss.csv");
    for (const auto& [step, img] : rec.snapshots) {
        char name[48];
        std::snprintf(name, sizeof(name), "snapshot_%05d.ppm", step);
        swag::save_ppm(out_dir + "/" + name, swag::denormalize(img));
        outputs.push_back(name);
    }
    return outputs;
}

void finish_manifest(swag::RunManifest& m, const std::string& out_dir) {
    std::sort(m.outputs.begin(), m.outputs.end());
    swag::save_manifest(out_dir + "/manifest.json", m);
}

json input_entry(const std::string& path) {
    return json{{"path", path}, {"crc32", swag::file_crc32_hex(path)}};
}

// ---------------------------------------------------------------------------
// Subcommand bodies. Each one takes the fully resolved config so that replay
// can drive it from a stored manifest.

template <typename S>
void run_stylize(const CommonOpts& o, const std::string& content_path,
                 const std::string& style_path, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const auto [w, h] = parse_size(o.size);
    const swag::ImageBuffer content = load_sized(content_path, w, h);
    const swag::ImageBuffer style = load_sized(style_path, w, h);
    swag::Network<S> net = resolve_network<S>(o);
    auto [lc, oc] = resolve_optim<S>(o, net.spec);

    swag::RunRecord<S> rec =
        swag::stylize(net, swag::normalize<S>(content), swag::normalize<S>(style), lc, oc);

    swag::RunManifest m;
    m.subcommand = "stylize";
    m.precision = g_precision;
    m.config = common_to_json(o);
    m.config["content"] = content_path;
    m.config["style"] = style_path;
    m.inputs["content"] = input_entry(content_path);
    m.inputs["style"] = input_entry(style_path);
    if (!o.weights.empty()) m.inputs["weights"] = input_entry(o.weights);
    m.outputs = write_run_outputs(out_dir, rec);
    finish_manifest(m, out_dir);
}

template <typename S>
void run_reconstruct(const CommonOpts& o, const std::string& content_path,
                     const std::string& tap, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const auto [w, h] = parse_size(o.size);
    const swag::ImageBuffer content = load_sized(content_path, w, h);
    swag::Network<S> net = resolve_network<S>(o);
    auto [lc, oc] = resolve_optim<S>(o, net.spec);

    swag::RunRecord<S> rec = swag::reconstruct(net, swag::normalize<S>(content), tap, lc, oc);

    swag::RunManifest m;
    m.subcommand = "reconstruct";
    m.precision = g_precision;
    m.config = common_to_json(o);
    m.config["content"] = content_path;
    m.config["tap"] = tap;
    m.inputs["content"] = input_entry(content_path);
    if (!o.weights.empty()) m.inputs["weights"] = input_entry(o.weights);
    m.extra["psnr"] = std::isinf(rec.psnr) ? json("inf") : json(rec.psnr);
    m.outputs = write_run_outputs(out_dir, rec);
    finish_manifest(m, out_dir);
}

template <typename S>
void run_synthesize(const CommonOpts& o, const std::string& style_path,
                    const std::string& out_dir) {
    fs::create_directories(out_dir);
    const auto [w, h] = parse_size(o.size);
    const swag::ImageBuffer style = load_sized(style_path, w, h);
    swag::Network<S> net = resolve_network<S>(o);
    auto [lc, oc] = resolve_optim<S>(o, net.spec);

    swag::RunRecord<S> rec = swag::synthesize_texture(net, swag::normalize<S>(style), lc, oc);

    swag::RunManifest m;
    m.subcommand = "synthesize";
    m.precision = g_precision;
    m.config = common_to_json(o);
    m.config["style"] = style_path;
    m.inputs["style"] = input_entry(style_path);
    if (!o.weights.empty()) m.inputs["weights"] = input_entry(o.weights);
    m.outputs = write_run_outputs(out_dir, rec);
    finish_manifest(m, out_dir);
}

template <typename S>
void run_probe(const CommonOpts& o, const std::string& images_dir, bool swag_stats,
               int n_seeds, int jobs, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const auto [w, h] = parse_size(o.size);
    if (!fs::is_directory(images_dir))
        throw swag::ConfigError("--images is not a directory: " + images_dir);
    std::vector<std::string> image_paths;
    for (const auto& e : fs::directory_iterator(images_dir)) {
        const std::string ext = e.path().extension().string();
        if (ext == ".ppm" || ext == ".png") image_paths.push_back(e.path().string());
    }
    std::sort(image_paths.begin(), image_paths.end());
    if (image_paths.empty()) throw swag::ConfigError("no images found in " + images_dir);
    if (n_seeds < 1) throw swag::ConfigError("--seeds must be >= 1");

    const swag::ArchSpec spec = resolve_arch(o);

    struct Job {
        std::uint64_t seed;
        std::string image;
    };
    std::vector<Job> jobs_list;
    for (int s = 0; s < n_seeds; ++s)
        for (const auto& p : image_paths)
            jobs_list.push_back({o.seed + static_cast<std::uint64_t>(s), p});

    std::vector<std::vector<swag::StatsReport>> results(jobs_list.size());
    auto worker = [&](std::size_t lo, std::size_t hi) {
        std::uint64_t net_seed = ~0ull;
        swag::Network<S> net;
        for (std::size_t i = lo; i < hi; ++i) {
            const Job& job = jobs_list[i];
            if (job.seed != net_seed) {
                net = o.weights.empty() ? swag::init_random<S>(spec, job.seed)
                                        : swag::load_bundle<S>(o.weights, spec);
                net_seed = job.seed;
            }
            const swag::ImageBuffer img = load_sized(job.image, w, h);
            swag::FeatureTaps<S> taps = forward_taps(net, swag::normalize<S>(img));
            swag::FeatureTaps<S> style_only;
            for (const auto& name : spec.style_taps)
                style_only.items.emplace_back(name, taps.at(name));
            std::vector<swag::StatsReport> reports;
            reports.push_back(swag::full_stats(style_only, false));
            if (swag_stats) reports.push_back(swag::full_stats(style_only, true));
            for (auto& r : reports) {
                r.arch = spec.name;
                r.seed = job.seed;
                r.image = fs::path(job.image).filename().string();
            }
            results[i] = std::move(reports);
        }
    };
    const int n_workers = std::max(1, std::min<int>(jobs, static_cast<int>(jobs_list.size())));
    if (n_workers <= 1) {
        worker(0, jobs_list.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (jobs_list.size() + n_workers - 1) / n_workers;
        for (int t = 0; t < n_workers; ++t) {
            const std::size_t lo = t * chunk;
            if (lo >= jobs_list.size()) break;
            pool.emplace_back(worker, lo, std::min(jobs_list.size(), lo + chunk));
        }
        for (auto& th : pool) th.join();
    }

    CsvWriter csv(out_dir + "/stats.csv");
    csv.row({"arch", "seed", "image", "tap", "depth_index", "max_activation",
             "activation_entropy", "gram_max", "gram_entropy", "smoothed"});
    for (const auto& reports : results)
        for (const auto& r : reports)
            for (const auto& t : r.taps)
                csv.row({r.arch, std::to_string(r.seed), r.image, t.tap,
                         std::to_string(t.depth_index), fmt(t.max_activation),
                         fmt(t.activation_entropy), fmt(t.gram_max), fmt(t.gram_entropy),
                         r.smoothed ? "true" : "false"});

    swag::RunManifest m;
    m.subcommand = "probe";
    m.precision = g_precision;
    m.config = common_to_json(o);
    m.config["images"] = images_dir;
    m.config["swag_stats"] = swag_stats;
    m.config["seeds"] = n_seeds;
    m.config["jobs"] = jobs;
    for (const auto& p : image_paths)
        m.inputs[fs::path(p).filename().string()] = input_entry(p);
    m.outputs = {"stats.csv"};
    finish_manifest(m, out_dir);
}

template <typename S>
void run_tracks(const CommonOpts& o, const std::string& image_path, int n_positions,
                const std::string& channel_rule, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const auto [w, h] = parse_size(o.size);
    const swag::ImageBuffer img = load_sized(image_path, w, h);
    swag::Network<S> net = resolve_network<S>(o);

    swag::TrackReduce reduce;
    if (channel_rule == "max")
        reduce = swag::TrackReduce::channel_max;
    else if (channel_rule == "random")
        reduce = swag::TrackReduce::random_channel;
    else
        throw swag::ConfigError("unknown channel rule: " + channel_rule);

    const swag::TrackSet tracks =
        swag::activation_tracks(net, swag::normalize<S>(img), n_positions, o.seed, reduce);

    CsvWriter csv(out_dir + "/tracks.csv");
    csv.row({"position_id", "u", "v", "tap", "value"});
    for (std::size_t p = 0; p < tracks.positions.size(); ++p)
        for (std::size_t t = 0; t < tracks.taps.size(); ++t)
            csv.row({std::to_string(p), std::to_string(tracks.positions[p].first),
                     std::to_string(tracks.positions[p].second), tracks.taps[t],
                     fmt(tracks.values[p][t])});

    swag::RunManifest m;
    m.subcommand = "tracks";
    m.precision = g_precision;
    m.config = common_to_json(o);
    m.config["image"] = image_path;
    m.config["n"] = n_positions;
    m.config["channel_rule"] = channel_rule;
    m.inputs["image"] = input_entry(image_path);
    if (!o.weights.empty()) m.inputs["weights"] = input_entry(o.weights);
    m.outputs = {"tracks.csv"};
    finish_manifest(m, out_dir);
}

template <typename S>
void replay_manifest(const swag::RunManifest& m, const std::string& out_dir) {
    // Inputs must still hash to what the manifest recorded, otherwise the
    // bit-exact reproduction promise cannot hold.
    for (const auto& [name, entry] : m.inputs.items()) {
        const std::string path = entry.at("path");
        const std::string want = entry.at("crc32");
        if (swag::file_crc32_hex(path) != want)
            throw swag::ConfigError("input " + name + " changed since the manifest: " + path);
    }
    const CommonOpts o = common_from_json(m.config);
    if (m.subcommand == "stylize") {
        run_stylize<S>(o, m.config.at("content"), m.config.at("style"), out_dir);
    } else if (m.subcommand == "reconstruct") {
        run_reconstruct<S>(o, m.config.at("content"), m.config.at("tap"), out_dir);
    } else if (m.subcommand == "synthesize") {
        run_synthesize<S>(o, m.config.at("style"), out_dir);
    } else if (m.subcommand == "probe") {
        run_probe<S>(o, m.config.at("images"), m.config.value("swag_stats", false),
                     m.config.value("seeds", 1), m.config.value("jobs", 1), out_dir);
    } else if (m.subcommand == "tracks") {
        run_tracks<S>(o, m.config.at("image"), m.config.value("n", 10),
                      m.config.value("channel_rule", std::string("max")), out_dir);
    } else {
        throw swag::ConfigError("cannot replay subcommand: " + m.subcommand);
    }
}

template <typename S>
int dispatch(const std::string& cmd, const CommonOpts& o, const json& args) {
    if (cmd == "stylize")
        run_stylize<S>(o, args.at("content"), args.at("style"), args.at("out"));
    else if (cmd == "reconstruct")
        run_reconstruct<S>(o, args.at("content"), args.at("tap"), args.at("out"));
    else if (cmd == "synthesize")
        run_synthesize<S>(o, args.at("style"), args.at("out"));
    else if (cmd == "probe")
        run_probe<S>(o, args.at("images"), args.at("swag_stats").get<bool>(),
                     args.at("seeds").get<int>(), args.at("jobs").get<int>(),
                     args.at("out"));
    else if (cmd == "tracks")
        run_tracks<S>(o, args.at("image"), args.at("n").get<int>(), args.at("channel_rule"),
                      args.at("out"));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"style transfer engine and activation diagnostics"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string content_path, style_path, image_path, images_dir, out_dir, tap,
        manifest_path;
    std::string channel_rule = "max";
    bool swag_stats = false;
    int n_seeds = 1, jobs = 1, n_positions = 10;

    auto* c_stylize = app.add_subcommand("stylize", "synthesize content in a style");
    c_stylize->add_option("--content", content_path, "content image")->required();
    c_stylize->add_option("--style", style_path, "style image")->required();
    c_stylize->add_option("--out", out_dir, "output directory")->required();
    add_common_flags(c_stylize, opts, true);

    auto* c_probe = app.add_subcommand("probe", "activation statistics over an image set");
    c_probe->add_option("--images", images_dir, "directory of images")->required();
    c_probe->add_option("--out", out_dir, "output directory")->required();
    c_probe->add_flag("--swag-stats", swag_stats, "also emit smoothed-statistics rows");
    c_probe->add_option("--seeds", n_seeds, "number of consecutive seeds");
    c_probe->add_option("--jobs", jobs, "parallel (seed, image) workers");
    add_common_flags(c_probe, opts, false);

    auto* c_tracks = app.add_subcommand("tracks", "activation tracks across layers");
    c_tracks->add_option("--image", image_path, "input image")->required();
    c_tracks->add_option("--out", out_dir, "output directory")->required();
    c_tracks->add_option("--n", n_positions, "number of sampled positions");
    c_tracks->add_option("--channel-rule", channel_rule, "max or random");
    add_common_flags(c_tracks, opts, false);

    auto* c_recon = app.add_subcommand("reconstruct", "invert features at one tap");
    c_recon->add_option("--content", content_path, "content image")->required();
    c_recon->add_option("--tap", tap, "tap to match")->required();
    c_recon->add_option("--out", out_dir, "output directory")->required();
    add_common_flags(c_recon, opts, true);

    auto* c_synth = app.add_subcommand("synthesize", "style-only texture synthesis");
    c_synth->add_option("--style", style_path, "style image")->required();
    c_synth->add_option("--out", out_dir, "output directory")->required();
    add_common_flags(c_synth, opts, true);

    auto* c_replay = app.add_subcommand("replay", "re-run a stored manifest");
    c_replay->add_option("--manifest", manifest_path, "manifest.json path")->required();
    c_replay->add_option("--out", out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    // reconstruct defaults to a noise start unless the user asked otherwise
    if (c_recon->parsed() && c_recon->count("--init") == 0) opts.init = "noise";

    try {
        json args;
        args["content"] = content_path;
        args["style"] = style_path;
        args["image"] = image_path;
        args["images"] = images_dir;
        args["out"] = out_dir;
        args["tap"] = tap;
        args["manifest"] = manifest_path;
        args["channel_rule"] = channel_rule;
        args["swag_stats"] = swag_stats;
        args["seeds"] = n_seeds;
        args["jobs"] = jobs;
        args["n"] = n_positions;
        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "replay") {
            const swag::RunManifest m = swag::load_manifest(manifest_path);
            g_precision = m.precision;
            if (g_precision == "f64")
                replay_manifest<double>(m, out_dir);
            else
                replay_manifest<float>(m, out_dir);
            return 0;
        }
        g_precision = precision_from_env();
        if (g_precision == "f64") return dispatch<double>(cmd, opts, args);
        return dispatch<float>(cmd, opts, args);
    } catch (const swag::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const swag::NumericError& e) {
        std::fprintf(stderr, "numeric fault: %s\n", e.what());
        return 3;
    } catch (const swag::ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return 4;
    } catch (const swag::IoError& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
