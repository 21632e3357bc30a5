#include "gantruth/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

namespace gantruth {

namespace {

constexpr char kMagic[8] = {'G', 'T', 'C', 'K', 'P', 'T', '0', '1'};

template <typename T>
void put(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::ifstream& f) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof v);
    GT_REQUIRE(f.good(), "archive: truncated file");
    return v;
}

} // namespace

void Archive::add(const std::string& name, std::vector<int> shape, std::vector<float> data) {
    GT_REQUIRE(!has(name), "archive: duplicate array name ", name);
    size_t n = 1;
    for (int d : shape) n *= size_t(d);
    GT_REQUIRE(n == data.size(), "archive: shape/data mismatch for ", name);
    arrays.push_back({name, std::move(shape), std::move(data)});
}

bool Archive::has(const std::string& name) const {
    for (const auto& a : arrays)
        if (a.name == name) return true;
    return false;
}

const ArchiveArray& Archive::find(const std::string& name) const {
    for (const auto& a : arrays)
        if (a.name == name) return a;
    fail("archive: missing array ", name);
}

void save_archive(const std::string& path, const Archive& archive) {
    std::vector<const ArchiveArray*> sorted;
    for (const auto& a : archive.arrays) sorted.push_back(&a);
    std::sort(sorted.begin(), sorted.end(),
              [](const ArchiveArray* a, const ArchiveArray* b) { return a->name < b->name; });

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    GT_REQUIRE(f.good(), "archive: cannot write ", path);
    f.write(kMagic, sizeof kMagic);
    std::string manifest = archive.manifest.dump();
    put<uint64_t>(f, manifest.size());
    f.write(manifest.data(), long(manifest.size()));
    put<uint32_t>(f, uint32_t(sorted.size()));
    for (const ArchiveArray* a : sorted) {
        put<uint32_t>(f, uint32_t(a->name.size()));
        f.write(a->name.data(), long(a->name.size()));
        put<uint32_t>(f, uint32_t(a->shape.size()));
        for (int d : a->shape) put<int32_t>(f, d);
        put<uint64_t>(f, a->data.size());
        f.write(reinterpret_cast<const char*>(a->data.data()), long(a->data.size() * 4));
    }
    GT_REQUIRE(f.good(), "archive: write failed for ", path);
}

Archive load_archive(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    GT_REQUIRE(f.good(), "archive: cannot open ", path);
    char magic[8];
    f.read(magic, 8);
    GT_REQUIRE(f.good() && std::memcmp(magic, kMagic, 8) == 0, "archive: bad magic in ", path);
    Archive archive;
    auto mlen = get<uint64_t>(f);
    std::string manifest(mlen, '\0');
    f.read(manifest.data(), long(mlen));
    GT_REQUIRE(f.good(), "archive: truncated manifest in ", path);
    archive.manifest = nlohmann::json::parse(manifest);
    auto count = get<uint32_t>(f);
    for (uint32_t i = 0; i < count; ++i) {
        ArchiveArray a;
        auto nlen = get<uint32_t>(f);
        a.name.resize(nlen);
        f.read(a.name.data(), long(nlen));
        auto ndim = get<uint32_t>(f);
        for (uint32_t d = 0; d < ndim; ++d) a.shape.push_back(get<int32_t>(f));
        auto n = get<uint64_t>(f);
        a.data.resize(n);
        f.read(reinterpret_cast<char*>(a.data.data()), long(n * 4));
        GT_REQUIRE(f.good(), "archive: truncated array ", a.name, " in ", path);
        archive.arrays.push_back(std::move(a));
    }
    return archive;
}

uint64_t archive_checksum(const Archive& archive, const std::string& prefix) {
    std::vector<const ArchiveArray*> sorted;
    for (const auto& a : archive.arrays)
        if (a.name.rfind(prefix, 0) == 0) sorted.push_back(&a);
    std::sort(sorted.begin(), sorted.end(),
              [](const ArchiveArray* a, const ArchiveArray* b) { return a->name < b->name; });
    uint64_t h = 0xcbf29ce484222325ull;
    for (const ArchiveArray* a : sorted) {
        h = fnv1a64(a->name.data(), a->name.size(), h);
        h = fnv1a64(a->shape.data(), a->shape.size() * sizeof(int), h);
        h = fnv1a64(a->data.data(), a->data.size() * 4, h);
    }
    return h;
}

uint64_t file_hash(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    GT_REQUIRE(f.good(), "file_hash: cannot open ", path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    return fnv1a64(bytes);
}

} // namespace gantruth
