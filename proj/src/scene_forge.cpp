#include "gantruth/scene_forge.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "gantruth/png_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gantruth {

namespace toy_class {
const char* name(int id) {
    switch (id) {
        case kVoid: return "void";
        case kSky: return "sky";
        case kRoad: return "road";
        case kBuilding: return "building";
        case kCar: return "car";
        case kPedestrian: return "pedestrian";
        default: return "?";
    }
}
} // namespace toy_class

namespace {

struct Rgb {
    uint8_t r, g, b;
};

// flat "synthetic" palette
constexpr std::array<Rgb, toy_class::kCount> kSourcePalette = {{
    {0, 0, 0},       // void
    {64, 120, 216},  // sky
    {80, 82, 92},    // road
    {168, 88, 48},   // building
    {208, 44, 44},   // car
    {232, 196, 64},  // pedestrian
}};

// desaturated "real" palette
constexpr std::array<Rgb, toy_class::kCount> kTargetPalette = {{
    {0, 0, 0},
    {156, 172, 188},
    {72, 74, 80},
    {124, 112, 100},
    {64, 84, 120},
    {148, 124, 92},
}};

int horizon_px(const SceneSpec& spec) {
    return int(std::lround(spec.horizon_row * spec.height));
}

double ground_disparity(const SceneSpec& spec, int row, int hpx) {
    // ground depth at a pixel row: Z = f * h_cam / (row - horizon + 0.5)
    return spec.camera.baseline_m * (double(row) - hpx + 0.5) / kCameraHeightM;
}

struct ProjectedObject {
    PixelBox box;
    double disparity = 0;
    int class_id = 0;
    size_t object_index = 0;
};

std::optional<ProjectedObject> project_object(const SceneSpec& spec, const ObjectSpec& obj,
                                              size_t index) {
    const double f = spec.camera.focal_px;
    const double z = obj.depth_m;
    const int hpx = horizon_px(spec);
    double bottom = hpx + f * kCameraHeightM / z;
    double top = bottom - f * obj.height_m / z;
    double cx = spec.width / 2.0 + f * obj.x_m / z;
    double half_w = f * obj.width_m / (2.0 * z);
    PixelBox b;
    b.y1 = int(std::lround(bottom));
    b.y0 = int(std::lround(top));
    b.x0 = int(std::lround(cx - half_w));
    b.x1 = int(std::lround(cx + half_w));
    if (b.x1 <= b.x0 || b.y1 <= b.y0) return std::nullopt;
    if (b.x0 < 0 || b.y0 < 0 || b.x1 > spec.width || b.y1 > spec.height) return std::nullopt;
    return ProjectedObject{b, f * spec.camera.baseline_m / z, obj.class_id, index};
}

struct Geometry {
    LabelMap semantic;
    DisparityMap disparity;
    std::vector<int> owner;  // -1 background, else object index
};

Geometry render_geometry(const SceneSpec& spec) {
    const int h = spec.height, w = spec.width;
    const int hpx = horizon_px(spec);
    Geometry g{LabelMap(h, w), DisparityMap(h, w), std::vector<int>(size_t(h) * w, -1)};
    for (int y = 0; y < h; ++y) {
        bool sky = y < hpx;
        for (int x = 0; x < w; ++x) {
            g.semantic.at(y, x) = uint8_t(sky ? toy_class::kSky : toy_class::kRoad);
            g.disparity.at(y, x) = sky ? 0.f : float(ground_disparity(spec, y, hpx));
        }
    }
    // painter's algorithm: far to near, nearer objects overwrite
    std::vector<ProjectedObject> projected;
    for (size_t i = 0; i < spec.objects.size(); ++i) {
        auto p = project_object(spec, spec.objects[i], i);
        GT_REQUIRE(p.has_value(), "scene ", spec.seed, ": object ", i, " outside camera frustum");
        projected.push_back(*p);
    }
    std::stable_sort(projected.begin(), projected.end(),
                     [&](const ProjectedObject& a, const ProjectedObject& b) {
                         return spec.objects[a.object_index].depth_m >
                                spec.objects[b.object_index].depth_m;
                     });
    for (const auto& p : projected) {
        for (int y = p.box.y0; y < p.box.y1; ++y)
            for (int x = p.box.x0; x < p.box.x1; ++x) {
                g.semantic.at(y, x) = uint8_t(p.class_id);
                g.disparity.at(y, x) = float(p.disparity);
                g.owner[size_t(y) * w + x] = int(p.object_index);
            }
    }
    return g;
}

std::vector<InstanceGt> collect_instances(const SceneSpec& spec, const Geometry& g) {
    std::vector<InstanceGt> out;
    for (size_t i = 0; i < spec.objects.size(); ++i) {
        int cid = spec.objects[i].class_id;
        if (cid != toy_class::kCar && cid != toy_class::kPedestrian) continue;
        InstanceGt inst;
        inst.class_id = cid;
        inst.mask.assign(size_t(spec.height) * spec.width, 0);
        int x0 = spec.width, y0 = spec.height, x1 = 0, y1 = 0;
        bool any = false;
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x)
                if (g.owner[size_t(y) * spec.width + x] == int(i)) {
                    inst.mask[size_t(y) * spec.width + x] = 1;
                    any = true;
                    x0 = std::min(x0, x);
                    y0 = std::min(y0, y);
                    x1 = std::max(x1, x + 1);
                    y1 = std::max(y1, y + 1);
                }
        if (!any) continue;  // fully occluded by a nearer object
        inst.box = {x0, y0, x1, y1};
        out.push_back(std::move(inst));
    }
    return out;
}

double srgb_unit(uint8_t v) { return double(v) / 255.0; }

uint8_t quantize_unit(double v) {
    double x = v * 255.0;
    if (x < 0) x = 0;
    if (x > 255) x = 255;
    return uint8_t(std::lround(x));
}

void box_blur3(std::vector<double>& plane, int h, int w) {
    // separable binomial [1 2 1]/4, clamped borders
    std::vector<double> tmp(plane.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int xl = std::max(0, x - 1), xr = std::min(w - 1, x + 1);
            tmp[size_t(y) * w + x] = 0.25 * plane[size_t(y) * w + xl] +
                                     0.5 * plane[size_t(y) * w + x] +
                                     0.25 * plane[size_t(y) * w + xr];
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int yu = std::max(0, y - 1), yd = std::min(h - 1, y + 1);
            plane[size_t(y) * w + x] = 0.25 * tmp[size_t(yu) * w + x] +
                                       0.5 * tmp[size_t(y) * w + x] +
                                       0.25 * tmp[size_t(yd) * w + x];
        }
}

std::string sample_id(size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06zu", index);
    return buf;
}

json style_to_json(const StyleParams& s) {
    json j;
    j["target_palette"] = s.target_palette;
    j["noise_amp"] = s.noise_amp;
    j["blur_passes"] = s.blur_passes;
    j["gamma"] = s.gamma;
    j["vignette"] = s.vignette;
    return j;
}

StyleParams style_from_json(const json& j) {
    StyleParams s;
    s.target_palette = j.at("target_palette").get<bool>();
    auto amp = j.at("noise_amp").get<std::vector<double>>();
    GT_REQUIRE(amp.size() == s.noise_amp.size(), "style: noise_amp length mismatch");
    std::copy(amp.begin(), amp.end(), s.noise_amp.begin());
    s.blur_passes = j.at("blur_passes").get<int>();
    s.gamma = j.at("gamma").get<double>();
    s.vignette = j.at("vignette").get<double>();
    return s;
}

const char* domains_name(DatasetDomains d) {
    switch (d) {
        case DatasetDomains::kSource: return "source";
        case DatasetDomains::kTarget: return "target";
        default: return "both";
    }
}

DatasetDomains domains_from_name(const std::string& s) {
    if (s == "source") return DatasetDomains::kSource;
    if (s == "target") return DatasetDomains::kTarget;
    if (s == "both") return DatasetDomains::kBoth;
    fail("unknown dataset domains value: ", s);
}

} // namespace

SceneSpec generate_scene(uint64_t seed, const GenerateConfig& config) {
    GT_REQUIRE(config.horizon_min >= 0.2 && config.horizon_max <= 0.6 &&
                   config.horizon_min <= config.horizon_max,
               "generate_scene: horizon range [", config.horizon_min, ", ", config.horizon_max,
               "] outside [0.2, 0.6]");
    GT_REQUIRE(config.max_objects >= 0 && config.max_objects <= 8,
               "generate_scene: max_objects must lie in [0, 8]");
    GT_REQUIRE(config.height >= 16 && config.width >= 16, "generate_scene: image too small");

    Rng rng(seed * 0x9e3779b97f4a7c15ull + 0x6d7c5a3b1f2e4d01ull);
    SceneSpec spec;
    spec.seed = seed;
    spec.height = config.height;
    spec.width = config.width;
    spec.camera = config.camera;
    spec.horizon_row = rng.uniform(config.horizon_min, config.horizon_max);

    int want = int(rng.uniform_int(0, config.max_objects));
    for (int k = 0; k < want; ++k) {
        ObjectSpec obj;
        bool placed = false;
        for (int attempt = 0; attempt < 40 && !placed; ++attempt) {
            double pick = rng.uniform();
            if (pick < 0.25) {
                obj.class_id = toy_class::kBuilding;
                obj.depth_m = rng.uniform(20, 45);
                obj.width_m = rng.uniform(4, 12);
                obj.height_m = rng.uniform(4, 8);
            } else if (pick < 0.70) {
                obj.class_id = toy_class::kCar;
                obj.depth_m = rng.uniform(4, 25);
                obj.width_m = rng.uniform(3.2, 4.6);
                obj.height_m = rng.uniform(1.3, 1.7);
            } else {
                obj.class_id = toy_class::kPedestrian;
                obj.depth_m = rng.uniform(3, 15);
                obj.width_m = rng.uniform(0.5, 0.8);
                obj.height_m = rng.uniform(1.6, 1.9);
            }
            // feasible lateral range keeping the projection fully in frame
            double f = spec.camera.focal_px;
            double half_w = f * obj.width_m / (2.0 * obj.depth_m);
            double xmax_px = spec.width - 1.0 - half_w;
            double xmin_px = 1.0 + half_w;
            if (xmin_px >= xmax_px) continue;
            double cx = rng.uniform(xmin_px, xmax_px);
            obj.x_m = (cx - spec.width / 2.0) * obj.depth_m / f;
            spec.objects.push_back(obj);
            if (!project_object(spec, obj, spec.objects.size() - 1).has_value()) {
                spec.objects.pop_back();
                continue;
            }
            placed = true;
        }
    }
    validate_scene(spec);
    return spec;
}

void validate_scene(const SceneSpec& spec) {
    GT_REQUIRE(spec.height >= 16 && spec.width >= 16, "scene: image too small");
    GT_REQUIRE(spec.horizon_row >= 0.2 && spec.horizon_row <= 0.6,
               "scene: horizon_row ", spec.horizon_row, " outside [0.2, 0.6]");
    GT_REQUIRE(spec.camera.focal_px > 0 && spec.camera.baseline_m > 0, "scene: invalid camera");
    GT_REQUIRE(spec.objects.size() <= 8, "scene: more than 8 objects");
    for (size_t i = 0; i < spec.objects.size(); ++i) {
        const auto& obj = spec.objects[i];
        GT_REQUIRE(obj.depth_m >= 2.0 && obj.depth_m <= 50.0, "scene: object ", i, " depth ",
                   obj.depth_m, " outside [2, 50] m");
        GT_REQUIRE(obj.width_m > 0 && obj.height_m > 0, "scene: object ", i, " non-positive size");
        GT_REQUIRE(project_object(spec, obj, i).has_value(), "scene: object ", i,
                   " outside camera frustum");
    }
}

std::pair<ImageU8, SceneGroundTruth> render_source(const SceneSpec& spec) {
    validate_scene(spec);
    Geometry g = render_geometry(spec);
    ImageU8 img(spec.height, spec.width, 3);
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
            const Rgb& c = kSourcePalette[size_t(g.semantic.at(y, x))];
            img.at(y, x, 0) = c.r;
            img.at(y, x, 1) = c.g;
            img.at(y, x, 2) = c.b;
        }
    SceneGroundTruth gt;
    gt.instances = collect_instances(spec, g);
    gt.semantic = std::move(g.semantic);
    gt.disparity = std::move(g.disparity);
    return {std::move(img), std::move(gt)};
}

ImageU8 render_target(const SceneSpec& spec, const StyleParams& style) {
    validate_scene(spec);
    Geometry g = render_geometry(spec);
    const int h = spec.height, w = spec.width;
    const auto& palette = style.target_palette ? kTargetPalette : kSourcePalette;

    std::array<std::vector<double>, 3> planes;
    for (auto& p : planes) p.resize(size_t(h) * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int cls = g.semantic.at(y, x);
            const Rgb& base = palette[size_t(cls)];
            double amp = style.noise_amp[size_t(cls)];
            for (int c = 0; c < 3; ++c) {
                double v = srgb_unit(c == 0 ? base.r : (c == 1 ? base.g : base.b));
                if (amp > 0) {
                    uint64_t hsh = hash_coords(spec.seed, uint64_t(cls) * 3 + uint64_t(c),
                                               uint64_t(x), uint64_t(y));
                    v += amp * hash_unit(hsh);
                }
                planes[size_t(c)][size_t(y) * w + x] = std::clamp(v, 0.0, 1.0);
            }
        }
    for (int pass = 0; pass < style.blur_passes; ++pass)
        for (auto& p : planes) box_blur3(p, h, w);

    ImageU8 img(h, w, 3);
    double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
    double rmax2 = cx * cx + cy * cy;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double r2 = ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / rmax2;
            double shade = 1.0 - style.vignette * r2;
            for (int c = 0; c < 3; ++c) {
                double v = planes[size_t(c)][size_t(y) * w + x];
                if (style.gamma != 1.0) v = std::pow(v, style.gamma);
                img.at(y, x, c) = quantize_unit(v * shade);
            }
        }
    return img;
}

double measure_domain_gap(const std::vector<SceneSpec>& specs, const StyleParams& style) {
    GT_REQUIRE(!specs.empty(), "measure_domain_gap: no scenes");
    double total = 0;
    for (const auto& spec : specs) {
        auto [src, gt] = render_source(spec);
        ImageU8 tgt = render_target(spec, style);
        double acc = 0;
        for (size_t i = 0; i < src.px.size(); ++i)
            acc += std::abs(double(src.px[i]) - double(tgt.px[i])) / 255.0;
        total += acc / double(src.px.size());
    }
    return total / double(specs.size());
}

std::string scene_to_json(const SceneSpec& spec) {
    json j;
    j["seed"] = spec.seed;
    j["height"] = spec.height;
    j["width"] = spec.width;
    j["horizon_row"] = spec.horizon_row;
    j["camera"] = {{"focal_px", spec.camera.focal_px}, {"baseline_m", spec.camera.baseline_m}};
    j["objects"] = json::array();
    for (const auto& o : spec.objects)
        j["objects"].push_back({{"class_id", o.class_id},
                                {"x_m", o.x_m},
                                {"depth_m", o.depth_m},
                                {"width_m", o.width_m},
                                {"height_m", o.height_m}});
    return j.dump(2);
}

SceneSpec scene_from_json(const std::string& text) {
    json j = json::parse(text);
    SceneSpec spec;
    spec.seed = j.at("seed").get<uint64_t>();
    spec.height = j.at("height").get<int>();
    spec.width = j.at("width").get<int>();
    spec.horizon_row = j.at("horizon_row").get<double>();
    spec.camera.focal_px = j.at("camera").at("focal_px").get<double>();
    spec.camera.baseline_m = j.at("camera").at("baseline_m").get<double>();
    for (const auto& o : j.at("objects")) {
        ObjectSpec obj;
        obj.class_id = o.at("class_id").get<int>();
        obj.x_m = o.at("x_m").get<double>();
        obj.depth_m = o.at("depth_m").get<double>();
        obj.width_m = o.at("width_m").get<double>();
        obj.height_m = o.at("height_m").get<double>();
        spec.objects.push_back(obj);
    }
    return spec;
}

std::string style_to_json_text(const StyleParams& style) { return style_to_json(style).dump(2); }

StyleParams style_from_json_text(const std::string& text) {
    return style_from_json(json::parse(text));
}

uint16_t disparity_to_fixed(float d) {
    GT_REQUIRE(d >= 0.f, "disparity must be non-negative");
    double v = std::lround(double(d) * 256.0);
    GT_REQUIRE(v <= 65535.0, "disparity ", d, " exceeds 16-bit fixed-point range");
    return uint16_t(v);
}

float disparity_from_fixed(uint16_t v) { return float(v) / 256.f; }

std::vector<int64_t> rle_encode(const std::vector<uint8_t>& mask) {
    std::vector<int64_t> counts;
    uint8_t cur = 0;  // runs alternate starting from zeros
    int64_t run = 0;
    for (uint8_t v : mask) {
        uint8_t bit = v ? 1 : 0;
        if (bit == cur) {
            ++run;
        } else {
            counts.push_back(run);
            cur = bit;
            run = 1;
        }
    }
    counts.push_back(run);
    return counts;
}

std::vector<uint8_t> rle_decode(const std::vector<int64_t>& counts, size_t numel) {
    std::vector<uint8_t> mask;
    mask.reserve(numel);
    uint8_t cur = 0;
    for (int64_t c : counts) {
        GT_REQUIRE(c >= 0, "rle: negative run length");
        mask.insert(mask.end(), size_t(c), cur);
        cur = cur ? 0 : 1;
    }
    GT_REQUIRE(mask.size() == numel, "rle: decoded length ", mask.size(), " expected ", numel);
    return mask;
}

namespace {

void write_gt_files(const std::string& root, const std::string& id, const SceneGroundTruth& gt) {
    ImageU8 sem(gt.semantic.h, gt.semantic.w, 1);
    sem.px = gt.semantic.ids;
    write_png_gray8(root + "/gt/" + id + ".semantic.png", sem);

    Image16 disp(gt.disparity.h, gt.disparity.w);
    for (size_t i = 0; i < gt.disparity.d.size(); ++i)
        disp.px[i] = disparity_to_fixed(gt.disparity.d[i]);
    write_png_gray16(root + "/gt/" + id + ".disparity.png", disp);

    json insts = json::array();
    for (const auto& inst : gt.instances) {
        json ji;
        ji["class_id"] = inst.class_id;
        ji["box"] = {inst.box.x0, inst.box.y0, inst.box.x1, inst.box.y1};
        ji["mask"] = {{"size", {gt.semantic.h, gt.semantic.w}}, {"counts", rle_encode(inst.mask)}};
        insts.push_back(ji);
    }
    std::ofstream f(root + "/gt/" + id + ".instances.json", std::ios::trunc);
    GT_REQUIRE(f.good(), "cannot write instances for ", id);
    f << insts.dump(2) << "\n";
}

} // namespace

DatasetManifest write_dataset(const std::string& root, const std::vector<SceneSpec>& specs,
                              DatasetDomains domains, const StyleParams& style) {
    std::error_code ec;
    fs::create_directories(root, ec);
    GT_REQUIRE(!ec, "write_dataset: cannot create ", root, ": ", ec.message());
    {
        std::ofstream probe(root + "/_INCOMPLETE", std::ios::trunc);
        GT_REQUIRE(probe.good(), "write_dataset: path not writable: ", root);
        probe << "writing\n";
    }
    bool want_source = domains != DatasetDomains::kTarget;
    bool want_target = domains != DatasetDomains::kSource;
    if (want_source) {
        fs::create_directories(root + "/source");
        fs::create_directories(root + "/gt");
    }
    if (want_target) fs::create_directories(root + "/target");

    DatasetManifest manifest;
    manifest.domains = domains;
    manifest.style = style;
    if (!specs.empty()) {
        manifest.height = specs[0].height;
        manifest.width = specs[0].width;
        manifest.camera = specs[0].camera;
    }
    for (size_t i = 0; i < specs.size(); ++i) {
        const auto& spec = specs[i];
        GT_REQUIRE(spec.height == manifest.height && spec.width == manifest.width,
                   "write_dataset: mixed image sizes");
        std::string id = sample_id(i);
        if (want_source) {
            auto [img, gt] = render_source(spec);
            write_png_rgb8(root + "/source/" + id + ".png", img);
            write_gt_files(root, id, gt);
        }
        if (want_target) {
            write_png_rgb8(root + "/target/" + id + ".png", render_target(spec, style));
        }
        manifest.samples.push_back({id, spec.seed});
    }

    json j;
    j["version"] = manifest.version;
    j["image_size"] = {manifest.height, manifest.width};
    j["camera"] = {{"focal_px", manifest.camera.focal_px},
                   {"baseline_m", manifest.camera.baseline_m}};
    j["style"] = style_to_json(manifest.style);
    j["domains"] = domains_name(domains);
    j["samples"] = json::array();
    for (const auto& s : manifest.samples) j["samples"].push_back({{"id", s.id}, {"seed", s.seed}});
    {
        std::ofstream f(root + "/manifest.json", std::ios::trunc);
        GT_REQUIRE(f.good(), "write_dataset: cannot write manifest");
        f << j.dump(2) << "\n";
    }
    fs::remove(root + "/_INCOMPLETE");
    return manifest;
}

Dataset::Dataset(const std::string& root) : root_(root) {
    GT_REQUIRE(fs::exists(root), "dataset: no such directory: ", root);
    GT_REQUIRE(!fs::exists(root + "/_INCOMPLETE"),
               "dataset: ", root, " carries an incomplete-write marker; regenerate it");
    std::ifstream f(root + "/manifest.json");
    GT_REQUIRE(f.good(), "dataset: missing manifest.json in ", root);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    manifest_hash_ = fnv1a64(text.data(), text.size());
    json j = json::parse(text);
    manifest_.version = j.at("version").get<int>();
    manifest_.height = j.at("image_size")[0].get<int>();
    manifest_.width = j.at("image_size")[1].get<int>();
    manifest_.camera.focal_px = j.at("camera").at("focal_px").get<double>();
    manifest_.camera.baseline_m = j.at("camera").at("baseline_m").get<double>();
    manifest_.style = style_from_json(j.at("style"));
    manifest_.domains = domains_from_name(j.at("domains").get<std::string>());
    for (const auto& s : j.at("samples"))
        manifest_.samples.push_back({s.at("id").get<std::string>(), s.at("seed").get<uint64_t>()});
}

bool Dataset::has_source() const { return fs::exists(root_ + "/source"); }
bool Dataset::has_target() const { return fs::exists(root_ + "/target"); }
bool Dataset::has_gt() const { return fs::exists(root_ + "/gt"); }

ImageU8 Dataset::load_source(size_t index) const {
    GT_REQUIRE(index < size(), "dataset: sample index out of range");
    return read_png_rgb8(root_ + "/source/" + manifest_.samples[index].id + ".png");
}

ImageU8 Dataset::load_target(size_t index) const {
    GT_REQUIRE(index < size(), "dataset: sample index out of range");
    return read_png_rgb8(root_ + "/target/" + manifest_.samples[index].id + ".png");
}

SceneGroundTruth Dataset::load_gt(size_t index) const {
    GT_REQUIRE(index < size(), "dataset: sample index out of range");
    const std::string& id = manifest_.samples[index].id;
    SceneGroundTruth gt;
    ImageU8 sem = read_png_gray8(root_ + "/gt/" + id + ".semantic.png");
    gt.semantic = LabelMap(sem.h, sem.w);
    gt.semantic.ids = sem.px;
    Image16 disp = read_png_gray16(root_ + "/gt/" + id + ".disparity.png");
    gt.disparity = DisparityMap(disp.h, disp.w);
    for (size_t i = 0; i < disp.px.size(); ++i) gt.disparity.d[i] = disparity_from_fixed(disp.px[i]);

    std::ifstream f(root_ + "/gt/" + id + ".instances.json");
    GT_REQUIRE(f.good(), "dataset: missing instances for ", id);
    json insts = json::parse(f);
    for (const auto& ji : insts) {
        InstanceGt inst;
        inst.class_id = ji.at("class_id").get<int>();
        auto b = ji.at("box");
        inst.box = {b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()};
        auto size = ji.at("mask").at("size");
        GT_REQUIRE(size[0].get<int>() == sem.h && size[1].get<int>() == sem.w,
                   "dataset: instance mask size mismatch for ", id);
        inst.mask = rle_decode(ji.at("mask").at("counts").get<std::vector<int64_t>>(),
                               size_t(sem.h) * size_t(sem.w));
        gt.instances.push_back(std::move(inst));
    }
    return gt;
}

} // namespace gantruth
