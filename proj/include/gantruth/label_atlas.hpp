#pragma once

#include <array>
#include <optional>
#include <string>

#include "gantruth/image.hpp"

namespace gantruth {

// Source class -> target class with explicit NULL entries. NULL means the
// source class has no counterpart: its pixels become ignore_index and its
// instances are dropped from instance losses (gradient masking).
struct MappingEntry {
    int source_id = 0;
    std::string source_name;
    std::optional<int> target_id;  // nullopt = NULL
    std::string target_name;       // empty for NULL entries
};

class LabelMapping {
public:
    LabelMapping() = default;
    LabelMapping(std::string name, int ignore_index, std::vector<MappingEntry> entries);

    const std::string& name() const { return name_; }
    int ignore_index() const { return ignore_index_; }
    const std::vector<MappingEntry>& entries() const { return entries_; }

    bool has_source(int source_id) const;
    std::optional<int> target_of(int source_id) const;  // throws on unknown source id
    std::vector<int> target_ids() const;                // sorted unique non-NULL targets

private:
    std::string name_;
    int ignore_index_ = 255;
    std::vector<MappingEntry> entries_;
};

// Built-in names: "synthia-to-cityscapes", "synthia-to-coco",
// "toy-source-to-toy-target". Anything else is treated as a file path.
LabelMapping load_mapping(const std::string& name_or_path);
LabelMapping builtin_mapping(const std::string& name);
std::vector<std::string> builtin_mapping_names();
void save_mapping(const LabelMapping& mapping, const std::string& path);
std::string mapping_to_json(const LabelMapping& mapping);

// Applies the mapping to every pixel. Pixels already at ignore_index stay
// ignored; NULL-mapped pixels become ignore_index; an id that is neither
// declared nor ignored is an error naming the id.
LabelMap remap(const LabelMap& labels, const LabelMapping& mapping);

// One keep/drop flag per instance: drop iff the class maps to NULL.
std::vector<bool> instance_keep_flags(const std::vector<int>& instance_class_ids,
                                      const LabelMapping& mapping);

// Toy target taxonomy (what the frozen estimators predict):
// road(0), sky(1), construction(2), vehicle(3), human(4).
namespace toy_target {
enum : int { kRoad = 0, kSky = 1, kConstruction = 2, kVehicle = 3, kHuman = 4 };
constexpr int kCount = 5;
const char* name(int id);
// countable classes carrying instances
inline std::vector<int> thing_ids() { return {kVehicle, kHuman}; }
} // namespace toy_target

} // namespace gantruth
