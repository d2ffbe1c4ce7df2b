#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace cer {

// Content-addressed file cache: one file per key under a flat directory.
// Writes go through a temp file and an atomic rename, so concurrent writers
// of the same (deterministic) value are benign. Default-constructed caches
// are disabled no-ops.
class FileCache {
public:
    FileCache() = default;
    explicit FileCache(std::filesystem::path dir);

    bool enabled() const { return !dir_.empty(); }
    const std::filesystem::path& dir() const { return dir_; }

    std::optional<std::string> get(const std::string& key) const;
    void put(const std::string& key, std::string_view value) const;

private:
    std::filesystem::path dir_;
};

}  // namespace cer
