#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "swag/common.hpp"
#include "swag/image.hpp"

namespace swag {

// Machine-readable record written next to every CLI output. Replaying a
// manifest re-runs the stored configuration and must reproduce all outputs
// byte for byte, so nothing time- or host-dependent belongs in here.
struct RunManifest {
    std::string subcommand;
    std::string tool = "swag";
    std::string version = kVersion;
    std::string precision = "f32";
    nlohmann::json config = nlohmann::json::object();   // fully resolved flags
    nlohmann::json inputs = nlohmann::json::object();   // name -> {path, crc32}
    std::vector<std::string> outputs;                   // files in the out dir
    nlohmann::json extra = nlohmann::json::object();    // e.g. psnr
};

inline std::string file_crc32_hex(const std::string& path) {
    const auto bytes = detail::read_file(path);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%08x", detail::crc32(bytes.data(), bytes.size()));
    return buf;
}

inline nlohmann::json manifest_to_json(const RunManifest& m) {
    nlohmann::json j;
    j["tool"] = m.tool;
    j["version"] = m.version;
    j["subcommand"] = m.subcommand;
    j["precision"] = m.precision;
    j["config"] = m.config;
    j["inputs"] = m.inputs;
    j["outputs"] = m.outputs;
    if (!m.extra.empty()) j["extra"] = m.extra;
    return j;
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
    RunManifest m;
    m.tool = j.value("tool", std::string("swag"));
    m.version = j.value("version", std::string());
    m.subcommand = j.at("subcommand").get<std::string>();
    m.precision = j.value("precision", std::string("f32"));
    m.config = j.value("config", nlohmann::json::object());
    m.inputs = j.value("inputs", nlohmann::json::object());
    m.outputs = j.value("outputs", std::vector<std::string>{});
    m.extra = j.value("extra", nlohmann::json::object());
    return m;
}

inline void save_manifest(const std::string& path, const RunManifest& m) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f << manifest_to_json(m).dump(2) << "\n";
    if (!f) throw IoError("short write to " + path);
}

inline RunManifest load_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid manifest JSON: ") + e.what(), 0);
    }
    return manifest_from_json(j);
}

}  // namespace swag
