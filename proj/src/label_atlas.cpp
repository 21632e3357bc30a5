#include "gantruth/label_atlas.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

using nlohmann::json;

namespace gantruth {

namespace toy_target {
const char* name(int id) {
    switch (id) {
        case kRoad: return "road";
        case kSky: return "sky";
        case kConstruction: return "construction";
        case kVehicle: return "vehicle";
        case kHuman: return "human";
        default: return "?";
    }
}
} // namespace toy_target

LabelMapping::LabelMapping(std::string name, int ignore_index, std::vector<MappingEntry> entries)
    : name_(std::move(name)), ignore_index_(ignore_index), entries_(std::move(entries)) {
    GT_REQUIRE(ignore_index_ >= 0 && ignore_index_ <= 255, "mapping ", name_,
               ": ignore_index must fit 8-bit label files");
    std::set<int> seen;
    for (const auto& e : entries_) {
        GT_REQUIRE(e.source_id >= 0 && e.source_id <= 255, "mapping ", name_, ": source id ",
                   e.source_id, " out of 8-bit range");
        GT_REQUIRE(seen.insert(e.source_id).second, "mapping ", name_, ": duplicate source id ",
                   e.source_id);
        GT_REQUIRE(e.source_id != ignore_index_, "mapping ", name_, ": source id ", e.source_id,
                   " collides with ignore_index");
        if (e.target_id.has_value()) {
            GT_REQUIRE(*e.target_id != ignore_index_, "mapping ", name_, ": target id ",
                       *e.target_id, " collides with ignore_index ", ignore_index_);
            GT_REQUIRE(*e.target_id >= 0 && *e.target_id <= 255, "mapping ", name_,
                       ": target id out of 8-bit range");
        }
    }
}

bool LabelMapping::has_source(int source_id) const {
    for (const auto& e : entries_)
        if (e.source_id == source_id) return true;
    return false;
}

std::optional<int> LabelMapping::target_of(int source_id) const {
    for (const auto& e : entries_)
        if (e.source_id == source_id) return e.target_id;
    fail("mapping ", name_, ": unknown source class id ", source_id);
}

std::vector<int> LabelMapping::target_ids() const {
    std::set<int> ids;
    for (const auto& e : entries_)
        if (e.target_id.has_value()) ids.insert(*e.target_id);
    return {ids.begin(), ids.end()};
}

namespace {

MappingEntry entry(int sid, const char* sname, std::optional<int> tid, const char* tname) {
    return {sid, sname, tid, tid.has_value() ? tname : ""};
}

constexpr auto kNull = std::nullopt;

LabelMapping make_synthia_to_cityscapes() {
    // SYNTHIA class id 2 is absent from the published table; it is shipped
    // here as an explicit NULL so remap stays total on 0..15.
    return LabelMapping(
        "synthia-to-cityscapes", 255,
        {
            entry(0, "void", kNull, ""),
            entry(1, "sky", 10, "sky"),
            entry(2, "unlisted", kNull, ""),
            entry(3, "road", 0, "road"),
            entry(4, "sidewalk", 1, "sidewalk"),
            entry(5, "fence", 4, "fence"),
            entry(6, "vegetation", 8, "vegetation"),
            entry(7, "pole", 5, "pole"),
            entry(8, "car", 13, "car"),
            entry(9, "traffic sign", 7, "traffic sign"),
            entry(10, "pedestrian", 11, "person"),
            entry(11, "bicycle", 18, "bicycle"),
            entry(12, "lane-marking", 0, "road"),
            entry(13, "reserved", kNull, ""),
            entry(14, "reserved", kNull, ""),
            entry(15, "traffic light", 6, "traffic light"),
        });
}

LabelMapping make_synthia_to_coco() {
    return LabelMapping(
        "synthia-to-coco", 255,
        {
            entry(0, "void", kNull, ""),
            entry(1, "sky", kNull, ""),
            entry(2, "unlisted", kNull, ""),
            entry(3, "road", kNull, ""),
            entry(4, "sidewalk", kNull, ""),
            entry(5, "fence", kNull, ""),
            entry(6, "vegetation", kNull, ""),
            entry(7, "pole", kNull, ""),
            entry(8, "car", 3, "car"),
            entry(9, "traffic sign", 13, "traffic sign"),
            entry(10, "pedestrian", 1, "person"),
            entry(11, "bicycle", 2, "bicycle"),
            entry(12, "lane-marking", kNull, ""),
            entry(13, "reserved", kNull, ""),
            entry(14, "reserved", kNull, ""),
            entry(15, "traffic light", 10, "traffic light"),
        });
}

LabelMapping make_toy_mapping() {
    return LabelMapping("toy-source-to-toy-target", 255,
                        {
                            entry(0, "void", kNull, ""),
                            entry(1, "sky", toy_target::kSky, "sky"),
                            entry(2, "road", toy_target::kRoad, "road"),
                            entry(3, "building", toy_target::kConstruction, "construction"),
                            entry(4, "car", toy_target::kVehicle, "vehicle"),
                            entry(5, "pedestrian", toy_target::kHuman, "human"),
                        });
}

} // namespace

std::vector<std::string> builtin_mapping_names() {
    return {"synthia-to-cityscapes", "synthia-to-coco", "toy-source-to-toy-target"};
}

LabelMapping builtin_mapping(const std::string& name) {
    if (name == "synthia-to-cityscapes") return make_synthia_to_cityscapes();
    if (name == "synthia-to-coco") return make_synthia_to_coco();
    if (name == "toy-source-to-toy-target") return make_toy_mapping();
    fail("unknown built-in mapping: ", name);
}

LabelMapping load_mapping(const std::string& name_or_path) {
    for (const auto& n : builtin_mapping_names())
        if (n == name_or_path) return builtin_mapping(n);
    std::ifstream f(name_or_path);
    GT_REQUIRE(f.good(), "load_mapping: '", name_or_path,
               "' is neither a built-in mapping name nor a readable file");
    json j = json::parse(f);
    std::vector<MappingEntry> entries;
    for (const auto& e : j.at("entries")) {
        MappingEntry m;
        m.source_id = e.at("source_id").get<int>();
        m.source_name = e.at("source_name").get<std::string>();
        if (!e.at("target_id").is_null()) {
            m.target_id = e.at("target_id").get<int>();
            m.target_name = e.at("target_name").get<std::string>();
        }
        entries.push_back(std::move(m));
    }
    return LabelMapping(j.at("name").get<std::string>(), j.at("ignore_index").get<int>(),
                        std::move(entries));
}

std::string mapping_to_json(const LabelMapping& mapping) {
    json j;
    j["name"] = mapping.name();
    j["ignore_index"] = mapping.ignore_index();
    j["entries"] = json::array();
    for (const auto& e : mapping.entries()) {
        json je;
        je["source_id"] = e.source_id;
        je["source_name"] = e.source_name;
        if (e.target_id.has_value()) {
            je["target_id"] = *e.target_id;
            je["target_name"] = e.target_name;
        } else {
            je["target_id"] = nullptr;
            je["target_name"] = nullptr;
        }
        j["entries"].push_back(je);
    }
    return j.dump(2);
}

void save_mapping(const LabelMapping& mapping, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    GT_REQUIRE(f.good(), "save_mapping: cannot write ", path);
    f << mapping_to_json(mapping) << "\n";
}

LabelMap remap(const LabelMap& labels, const LabelMapping& mapping) {
    std::array<int, 256> lut;
    lut.fill(-1);
    lut[size_t(mapping.ignore_index())] = mapping.ignore_index();
    for (const auto& e : mapping.entries())
        lut[size_t(e.source_id)] =
            e.target_id.has_value() ? *e.target_id : mapping.ignore_index();
    LabelMap out(labels.h, labels.w);
    for (size_t i = 0; i < labels.ids.size(); ++i) {
        int t = lut[labels.ids[i]];
        GT_REQUIRE(t >= 0, "remap: source id ", int(labels.ids[i]), " is not declared by mapping ",
                   mapping.name(), " (no silent pass-through)");
        out.ids[i] = uint8_t(t);
    }
    return out;
}

std::vector<bool> instance_keep_flags(const std::vector<int>& instance_class_ids,
                                      const LabelMapping& mapping) {
    std::vector<bool> keep;
    keep.reserve(instance_class_ids.size());
    for (int cid : instance_class_ids) keep.push_back(mapping.target_of(cid).has_value());
    return keep;
}

} // namespace gantruth
