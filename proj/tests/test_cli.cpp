// End-to-end tests of the command-line tool: flag surface, file outputs,
// exit codes, CSV schemas and manifest replay.
#include <gtest/gtest.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "swag/image.hpp"
#include "swag/net.hpp"
#include "swag/weights.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kCli = SWAG_CLI_PATH;
const std::string kAssets = SWAG_ASSETS_DIR;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("swag_cli_test_" + std::to_string(
                                       std::chrono::steady_clock::now().time_since_epoch().count()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const std::string& sub = "") const {
        return (sub.empty() ? path : path / sub).string();
    }
};

int run(const std::string& args) {
    const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream f(path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(f, line)) lines.push_back(line);
    return lines;
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::string content0() { return kAssets + "/content/c00.ppm"; }
std::string style0() { return kAssets + "/style/s00.ppm"; }

}  // namespace

TEST(Cli, StylizeProducesOutputs) {
    TempDir tmp;
    const int rc = run("stylize --content " + content0() + " --style " + style0() +
                       " --arch resnet50 --swag --steps 2 --size 64x64 --seed 7 --out " +
                       tmp.str("run"));
    ASSERT_EQ(rc, 0);
    EXPECT_TRUE(fs::exists(tmp.str("run") + "/final.ppm"));
    EXPECT_TRUE(fs::exists(tmp.str("run") + "/loss.csv"));
    EXPECT_TRUE(fs::exists(tmp.str("run") + "/manifest.json"));

    const auto lines = read_lines(tmp.str("run") + "/loss.csv");
    ASSERT_EQ(lines.size(), 3u);  // header + 2 steps
    EXPECT_EQ(lines[0], "step,total,content,style");
}

TEST(Cli, StylizeDeterministicAcrossInvocations) {
    TempDir tmp;
    const std::string args = "stylize --content " + content0() + " --style " + style0() +
                             " --arch resnet50 --steps 3 --size 64x64 --seed 7 "
                             "--init noise --out ";
    ASSERT_EQ(run(args + tmp.str("a")), 0);
    ASSERT_EQ(run(args + tmp.str("b")), 0);
    EXPECT_EQ(read_bytes(tmp.str("a") + "/final.ppm"), read_bytes(tmp.str("b") + "/final.ppm"));
    EXPECT_EQ(read_bytes(tmp.str("a") + "/loss.csv"), read_bytes(tmp.str("b") + "/loss.csv"));
    EXPECT_EQ(read_bytes(tmp.str("a") + "/manifest.json"),
              read_bytes(tmp.str("b") + "/manifest.json"));
}

TEST(Cli, UnknownArchExitsTwo) {
    TempDir tmp;
    EXPECT_EQ(run("stylize --content " + content0() + " --style " + style0() +
                  " --arch resnet34 --steps 1 --out " + tmp.str("x")),
              2);
}

TEST(Cli, MissingInputExitsFour) {
    TempDir tmp;
    EXPECT_EQ(run("stylize --content /nonexistent.ppm --style " + style0() +
                  " --steps 1 --out " + tmp.str("x")),
              4);
}

TEST(Cli, UsageErrorExitsTwo) {
    EXPECT_EQ(run("stylize --bogus-flag"), 2);
    EXPECT_EQ(run(""), 2);
}

TEST(Cli, ProbeSchemaAndSwagStats) {
    TempDir tmp;
    const int rc = run("probe --arch resnet50 --images " + kAssets +
                       "/style --seeds 1 --size 64x64 --swag-stats --out " + tmp.str("p"));
    ASSERT_EQ(rc, 0);
    const auto lines = read_lines(tmp.str("p") + "/stats.csv");
    ASSERT_GT(lines.size(), 1u);
    EXPECT_EQ(lines[0],
              "arch,seed,image,tap,depth_index,max_activation,activation_entropy,gram_max,"
              "gram_entropy,smoothed");
    // 10 images x 5 taps x {raw, smoothed}
    EXPECT_EQ(lines.size() - 1, 10u * 5u * 2u);
    int smoothed_rows = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        EXPECT_TRUE(lines[i].ends_with(",true") || lines[i].ends_with(",false"));
        smoothed_rows += lines[i].ends_with(",true");
    }
    EXPECT_EQ(smoothed_rows, 50);
}

TEST(Cli, ProbeEmptyDirExitsTwo) {
    TempDir tmp;
    fs::create_directories(tmp.str("empty"));
    EXPECT_EQ(run("probe --arch resnet50 --images " + tmp.str("empty") + " --out " +
                  tmp.str("p")),
              2);
}

TEST(Cli, TracksRowCount) {
    TempDir tmp;
    const int rc = run("tracks --arch resnet50 --image " + style0() +
                       " --n 10 --seed 1 --size 64x64 --out " + tmp.str("t"));
    ASSERT_EQ(rc, 0);
    const auto lines = read_lines(tmp.str("t") + "/tracks.csv");
    EXPECT_EQ(lines[0], "position_id,u,v,tap,value");
    EXPECT_EQ(lines.size() - 1, 10u * 5u);  // n * taps
}

TEST(Cli, ReconstructEmitsPsnr) {
    TempDir tmp;
    const int rc = run("reconstruct --content " + content0() +
                       " --tap conv3_4 --arch vgg19 --steps 2 --size 64x64 --out " +
                       tmp.str("r"));
    ASSERT_EQ(rc, 0);
    std::ifstream f(tmp.str("r") + "/manifest.json");
    nlohmann::json m;
    f >> m;
    ASSERT_TRUE(m.contains("extra"));
    ASSERT_TRUE(m["extra"].contains("psnr"));
    EXPECT_TRUE(m["extra"]["psnr"].is_number());
    EXPECT_GT(m["extra"]["psnr"].get<double>(), 0.0);
}

TEST(Cli, SynthesizeZeroStepsEqualsSeededNoise) {
    TempDir tmp;
    ASSERT_EQ(run("synthesize --style " + style0() +
                  " --arch vgg19 --steps 0 --seed 21 --size 64x64 --out " + tmp.str("a")),
              0);
    ASSERT_EQ(run("synthesize --style " + style0() +
                  " --arch vgg19 --steps 0 --seed 21 --size 64x64 --out " + tmp.str("b")),
              0);
    EXPECT_EQ(read_bytes(tmp.str("a") + "/final.ppm"), read_bytes(tmp.str("b") + "/final.ppm"));
    // different seed -> different noise
    ASSERT_EQ(run("synthesize --style " + style0() +
                  " --arch vgg19 --steps 0 --seed 22 --size 64x64 --out " + tmp.str("c")),
              0);
    EXPECT_NE(read_bytes(tmp.str("a") + "/final.ppm"), read_bytes(tmp.str("c") + "/final.ppm"));
}

TEST(Cli, ReplayReproducesBitExactly) {
    TempDir tmp;
    ASSERT_EQ(run("stylize --content " + content0() + " --style " + style0() +
                  " --arch noresnet --steps 2 --size 64x64 --seed 3 --out " + tmp.str("a")),
              0);
    ASSERT_EQ(run("replay --manifest " + tmp.str("a") + "/manifest.json --out " + tmp.str("b")),
              0);
    for (const char* f : {"/final.ppm", "/loss.csv", "/manifest.json"})
        EXPECT_EQ(read_bytes(tmp.str("a") + f), read_bytes(tmp.str("b") + f)) << f;
}

TEST(Cli, WeightsRoundTripThroughBundleFlag) {
    // save a bundle via the library, then drive the CLI with --weights:
    // the same seed+arch without weights must give identical outputs
    TempDir tmp;
    const auto spec = swag::preset("noresnet");
    {
        auto net = swag::init_random<float>(spec, 7);
        swag::save_bundle(tmp.str("net.swgw"), net);
    }
    const std::string common = "probe --arch noresnet --images " + kAssets +
                               "/style --seeds 1 --seed 7 --size 64x64 --out ";
    ASSERT_EQ(run(common + tmp.str("a")), 0);
    ASSERT_EQ(run(common + tmp.str("b") + " --weights " + tmp.str("net.swgw")), 0);
    const auto a = read_lines(tmp.str("a") + "/stats.csv");
    const auto b = read_lines(tmp.str("b") + "/stats.csv");
    EXPECT_EQ(a, b);
}

TEST(Cli, PrecisionEnvVarSelectsF64) {
    TempDir tmp;
    const std::string cmd = "SWAG_PRECISION=f64 " + kCli + " stylize --content " +
                            content0() + " --style " + style0() +
                            " --arch noresnet --steps 1 --size 64x64 --out " + tmp.str("a") +
                            " >/dev/null 2>&1";
    ASSERT_EQ(WEXITSTATUS(std::system(cmd.c_str())), 0);
    std::ifstream f(tmp.str("a") + "/manifest.json");
    nlohmann::json m;
    f >> m;
    EXPECT_EQ(m["precision"], "f64");

    const std::string bad = "SWAG_PRECISION=f128 " + kCli + " stylize --content " +
                            content0() + " --style " + style0() + " --steps 1 --out " +
                            tmp.str("b") + " >/dev/null 2>&1";
    EXPECT_EQ(WEXITSTATUS(std::system(bad.c_str())), 2);
}
