#include "cer/cache.hpp"

#include <unistd.h>

#include <atomic>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cer {

namespace fs = std::filesystem;

FileCache::FileCache(fs::path dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) {
        fs::create_directories(dir_);
    }
}

std::optional<std::string> FileCache::get(const std::string& key) const {
    if (!enabled()) {
        return std::nullopt;
    }
    std::ifstream in(dir_ / (key + ".json"), std::ios::binary);
    if (!in) {
        return std::nullopt;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void FileCache::put(const std::string& key, std::string_view value) const {
    if (!enabled()) {
        return;
    }
    static std::atomic<std::uint64_t> counter{0};
    const fs::path final_path = dir_ / (key + ".json");
    const fs::path tmp_path =
        dir_ / (key + ".tmp" + std::to_string(counter.fetch_add(1)) + "." +
                std::to_string(static_cast<unsigned long>(::getpid())));
    {
        std::ofstream out(tmp_path, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cache: cannot write " + tmp_path.string());
        }
        out.write(value.data(), static_cast<std::streamsize>(value.size()));
    }
    std::error_code ec;
    fs::rename(tmp_path, final_path, ec);
    if (ec) {
        fs::remove(tmp_path, ec);
    }
}

}  // namespace cer
