#pragma once

#include <string>

#include <json.hpp>

#include "gantruth/common.hpp"

namespace gantruth {

// Single-file archive: a JSON manifest plus named float arrays, written in
// name order so identical contents give identical bytes.
struct ArchiveArray {
    std::string name;
    std::vector<int> shape;
    std::vector<float> data;
};

struct Archive {
    nlohmann::json manifest;
    std::vector<ArchiveArray> arrays;

    void add(const std::string& name, std::vector<int> shape, std::vector<float> data);
    bool has(const std::string& name) const;
    const ArchiveArray& find(const std::string& name) const;
};

void save_archive(const std::string& path, const Archive& archive);
Archive load_archive(const std::string& path);

// FNV over (name, shape, raw bytes) of every array whose name matches the
// prefix, in name order. Used for frozen-parameter audits and provenance.
uint64_t archive_checksum(const Archive& archive, const std::string& prefix = "");

uint64_t file_hash(const std::string& path);

} // namespace gantruth
