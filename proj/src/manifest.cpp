#include "saucir/manifest.hpp"

#include "saucir/errors.hpp"
#include "saucir/ingest.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <memory>

namespace saucir::run {

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    std::string hex;
    hex.reserve(2 * len);
    static constexpr char kDigits[] = "0123456789abcdef";
    for (unsigned int i = 0; i < len; ++i) {
        hex.push_back(kDigits[digest[i] >> 4]);
        hex.push_back(kDigits[digest[i] & 0xf]);
    }
    return hex;
}

std::string sha256_file(const std::string& path) { return sha256_hex(ingest::read_file(path)); }

std::string timestamp() {
    std::time_t t = 0;
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
        char* end = nullptr;
        const long long v = std::strtoll(epoch, &end, 10);
        if (*end != '\0' || v < 0) {
            throw InvalidArgument(std::string("SOURCE_DATE_EPOCH is not a non-negative integer: ") + epoch);
        }
        t = static_cast<std::time_t>(v);
    } else {
        t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    }
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

nlohmann::json to_json(const Manifest& m) {
    nlohmann::json inputs = nlohmann::json::array();
    for (const auto& in : m.inputs) {
        inputs.push_back({{"role", in.role}, {"path", in.path}, {"sha256", in.sha256}});
    }
    return {{"command", m.command},
            {"argv", m.argv},
            {"cwd", m.cwd},
            {"config", m.config},
            {"inputs", inputs},
            {"seed", m.seed ? nlohmann::json(*m.seed) : nlohmann::json(nullptr)},
            {"version", m.version},
            {"started", m.started},
            {"finished", m.finished},
            {"outputs", m.outputs}};
}

OutputLayout::OutputLayout(const std::string& out) : out_(out), single_file_(out_.extension() == ".json") {}

std::filesystem::path OutputLayout::main(const std::string& name) const { return single_file_ ? out_ : out_ / name; }

std::filesystem::path OutputLayout::side(const std::string& name) const {
    if (!single_file_) {
        return out_ / name;
    }
    return out_.parent_path() / (out_.stem().string() + "." + name);
}

std::filesystem::path OutputLayout::manifest() const {
    return single_file_ ? side("manifest.json") : out_ / "manifest.json";
}

std::optional<std::filesystem::path> OutputLayout::log() const {
    if (single_file_) {
        return std::nullopt;
    }
    return out_ / "log.txt";
}

void OutputLayout::prepare() const {
    const auto dir = single_file_ ? out_.parent_path() : out_;
    if (dir.empty()) {
        return;
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw DataError("cannot create output directory '" + dir.string() + "': " + ec.message());
    }
}

}  // namespace saucir::run
