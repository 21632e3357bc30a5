#pragma once

#include <array>
#include <optional>
#include <string>

#include "gantruth/image.hpp"
#include "gantruth/rng.hpp"

namespace gantruth {

// Toy taxonomy. Small enough for desk-scale estimators, rich enough to
// exercise label mapping with NULL entries.
namespace toy_class {
enum : int { kVoid = 0, kSky = 1, kRoad = 2, kBuilding = 3, kCar = 4, kPedestrian = 5 };
constexpr int kCount = 6;
const char* name(int id);
} // namespace toy_class

struct ObjectSpec {
    int class_id = toy_class::kCar;
    double x_m = 0;       // lateral ground-plane position, camera-centered
    double depth_m = 10;  // distance along the optical axis
    double width_m = 4;
    double height_m = 1.5;
};

struct CameraSpec {
    double focal_px = 64;
    double baseline_m = 0.5;
};

struct SceneSpec {
    uint64_t seed = 0;
    int height = 64, width = 64;
    double horizon_row = 0.3;  // fraction of image height, must stay in [0.2, 0.6]
    CameraSpec camera;
    std::vector<ObjectSpec> objects;
};

// end-exclusive pixel box
struct PixelBox {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

struct InstanceGt {
    int class_id = 0;
    PixelBox box;
    std::vector<uint8_t> mask;  // h*w, 1 = instance pixel
};

struct SceneGroundTruth {
    LabelMap semantic;
    DisparityMap disparity;
    std::vector<InstanceGt> instances;
};

// Target-domain appearance transform. All effects are deterministic in
// (scene seed, pixel, class); zeroing every field degenerates to the flat
// source shading with the chosen palette.
struct StyleParams {
    bool target_palette = true;
    std::array<double, toy_class::kCount> noise_amp = {0, 0.015, 0.05, 0.07, 0.05, 0.05};
    int blur_passes = 1;
    double gamma = 0.85;    // 1.0 disables
    double vignette = 0.3;  // 0 disables
};

struct GenerateConfig {
    int height = 64, width = 64;
    double horizon_min = 0.28;
    double horizon_max = 0.42;
    int max_objects = 8;
    CameraSpec camera;
    double min_domain_gap = 0.05;  // tunable floor, see dataset checks
};

// ground plane height of the camera; fixed part of the toy world model
constexpr double kCameraHeightM = 1.5;

SceneSpec generate_scene(uint64_t seed, const GenerateConfig& config = {});
void validate_scene(const SceneSpec& spec);

std::pair<ImageU8, SceneGroundTruth> render_source(const SceneSpec& spec);
ImageU8 render_target(const SceneSpec& spec, const StyleParams& style = {});

// mean |source - target| per pixel-channel, in [0,1] units, averaged over specs
double measure_domain_gap(const std::vector<SceneSpec>& specs, const StyleParams& style = {});

std::string scene_to_json(const SceneSpec& spec);
SceneSpec scene_from_json(const std::string& text);

std::string style_to_json_text(const StyleParams& style);
StyleParams style_from_json_text(const std::string& text);

// -- on-disk dataset -----------------------------------------------------

enum class DatasetDomains { kSource, kTarget, kBoth };

struct SampleRef {
    std::string id;
    uint64_t seed = 0;
};

struct DatasetManifest {
    int version = 1;
    int height = 64, width = 64;
    CameraSpec camera;
    StyleParams style;
    DatasetDomains domains = DatasetDomains::kBoth;
    std::vector<SampleRef> samples;
};

// Layout under <root>:
//   source/<id>.png            8-bit RGB
//   target/<id>.png            8-bit RGB
//   gt/<id>.semantic.png       8-bit single channel class ids, 255 = ignore
//   gt/<id>.disparity.png      16-bit single channel, value = disparity * 256
//   gt/<id>.instances.json     [{class_id, box, mask:{size,counts}}]
//   manifest.json
// A `_INCOMPLETE` marker exists while writing; readers reject it.
DatasetManifest write_dataset(const std::string& root, const std::vector<SceneSpec>& specs,
                              DatasetDomains domains, const StyleParams& style = {});

class Dataset {
public:
    explicit Dataset(const std::string& root);

    const DatasetManifest& manifest() const { return manifest_; }
    const std::string& root() const { return root_; }
    size_t size() const { return manifest_.samples.size(); }
    uint64_t manifest_hash() const { return manifest_hash_; }

    bool has_source() const;
    bool has_target() const;
    bool has_gt() const;

    ImageU8 load_source(size_t index) const;
    ImageU8 load_target(size_t index) const;
    SceneGroundTruth load_gt(size_t index) const;

private:
    std::string root_;
    DatasetManifest manifest_;
    uint64_t manifest_hash_ = 0;
};

// disparity <-> 16-bit fixed point with scale 256
uint16_t disparity_to_fixed(float d);
float disparity_from_fixed(uint16_t v);

// run-length over row-major pixels, zeros first
std::vector<int64_t> rle_encode(const std::vector<uint8_t>& mask);
std::vector<uint8_t> rle_decode(const std::vector<int64_t>& counts, size_t numel);

} // namespace gantruth
