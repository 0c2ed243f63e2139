#include "lsm/results.hpp"

#include <fstream>

namespace lsm {

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

Json results_document(const std::string& subcommand, std::uint64_t seed, const Json& config,
                      const Json& payload) {
    Json doc;
    doc["schema_version"] = 1;
    doc["tool"] = "lsmkit";
    doc["subcommand"] = subcommand;
    doc["seed"] = seed;
    doc["config"] = config;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(fnv1a64(config.dump())));
    doc["config_hash"] = hash;
    doc["results"] = payload;
    return doc;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << content;
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

} // namespace lsm
