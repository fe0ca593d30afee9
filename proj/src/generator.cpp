#include "osda/generator.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "osda/errors.hpp"
#include "osda/rng.hpp"

namespace osda {

namespace {

std::vector<double> resolve_translation(const std::vector<double>& t, std::size_t dims,
                                        const char* key) {
    if (t.empty()) return std::vector<double>(dims, 0.0);
    if (t.size() == 1) return std::vector<double>(dims, t[0]);
    if (t.size() != dims) {
        throw input_error(std::string(key) + " must have 1 or dims entries");
    }
    return t;
}

void apply_affine(Matrix& features, double rotation_deg, double scale,
                  std::span<const double> translate) {
    const double theta = rotation_deg * std::numbers::pi / 180.0;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    for (std::size_t i = 0; i < features.rows(); ++i) {
        auto row = features.row(i);
        if (features.cols() >= 2 && rotation_deg != 0.0) {
            const double x = row[0];
            const double y = row[1];
            row[0] = c * x - s * y;
            row[1] = s * x + c * y;
        }
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = scale * row[j] + translate[j];
    }
}

/// Class means live on the sphere of radius class_sep, mimicking the norm
/// concentration of rectified deep features, subject to three constraints:
/// pairwise separation; no shadowing — the transformed position of any class
/// must stay min_class_sep away from every *other* source class mean,
/// otherwise that class would be indistinguishable from a foreign source
/// class in the target domain and the benchmark would be unlearnable there;
/// and, when the spec rotates, a minimum radius inside the rotation plane, so
/// the rotation displaces every class rather than only the equatorial ones.
Matrix place_class_means(const ShiftSpec& spec, Rng& rng) {
    const auto t = resolve_translation(spec.translate, spec.dims, "translate");
    const double min_sep2 = spec.min_class_sep * spec.min_class_sep;
    const double min_inplane2 = spec.rotation_deg != 0.0
                                    ? 0.36 * spec.class_sep * spec.class_sep  // 0.6 * radius
                                    : 0.0;

    std::vector<double> candidate(spec.dims);
    const auto transformed = [&](std::span<const double> mean) {
        Matrix row = Matrix::from_row(mean);
        apply_affine(row, spec.rotation_deg, spec.scale, t);
        return row;
    };

    for (int restart = 0; restart < 100; ++restart) {
        Matrix means(spec.num_total, spec.dims);
        bool layout_ok = true;
        for (std::size_t cls = 0; cls < spec.num_total && layout_ok; ++cls) {
            bool placed = false;
            for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
                double r2 = 0.0;
                for (double& v : candidate) {
                    v = rng.normal();
                    r2 += v * v;
                }
                if (r2 <= 0.0) continue;
                const double to_sphere = spec.class_sep / std::sqrt(r2);
                for (double& v : candidate) v *= to_sphere;
                if (spec.dims >= 2 &&
                    candidate[0] * candidate[0] + candidate[1] * candidate[1] < min_inplane2) {
                    continue;
                }

                placed = true;
                for (std::size_t prev = 0; prev < cls && placed; ++prev) {
                    if (squared_distance(candidate, means.row(prev)) < min_sep2) placed = false;
                }
                if (!placed) continue;

                const Matrix moved = transformed(candidate);
                const std::size_t shared_placed = std::min(cls, spec.num_shared);
                for (std::size_t j = 0; j < shared_placed && placed; ++j) {
                    if (squared_distance(moved.row(0), means.row(j)) < min_sep2) placed = false;
                }
                if (placed && cls < spec.num_shared) {
                    for (std::size_t j = 0; j < cls && placed; ++j) {
                        const Matrix prev_moved = transformed(means.row(j));
                        if (squared_distance(prev_moved.row(0), candidate) < min_sep2) {
                            placed = false;
                        }
                    }
                }
            }
            if (!placed) {
                layout_ok = false;
                break;
            }
            std::copy(candidate.begin(), candidate.end(), means.row(cls).begin());
        }
        if (layout_ok) return means;
    }
    throw input_error("generate_pair: cannot place class means under min_class_sep; "
                      "lower it, raise class_sep or reduce the transform");
}

}  // namespace

void ShiftSpec::validate() const {
    if (num_shared >= num_total) {
        throw input_error("ShiftSpec: shared_classes must be smaller than classes (open set)");
    }
    if (num_shared < 2) throw input_error("ShiftSpec: shared_classes must be >= 2");
    if (dims < 1) throw input_error("ShiftSpec: dims must be >= 1");
    if (dims < 2 && rotation_deg != 0.0) {
        throw input_error("ShiftSpec: rotation requires dims >= 2");
    }
    if (samples_per_class < 1) throw input_error("ShiftSpec: samples_per_class must be >= 1");
    if (!(noise_sigma > 0.0)) throw input_error("ShiftSpec: invalid covariance (noise_sigma <= 0)");
    if (min_class_sep < 0.0) throw input_error("ShiftSpec: min_class_sep must be >= 0");
    if (scale == 0.0) throw input_error("ShiftSpec: scale must be nonzero (transform invertible)");
    if (!translate.empty() && translate.size() != 1 && translate.size() != dims) {
        throw input_error("ShiftSpec: translate must have 1 or dims entries");
    }
    if (!source_translate.empty() && source_translate.size() != 1 &&
        source_translate.size() != dims) {
        throw input_error("ShiftSpec: source_translate must have 1 or dims entries");
    }
}

GeneratedPair generate_pair(const ShiftSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    GeneratedPair out;
    out.class_means = place_class_means(spec, rng);

    const auto sample_class = [&](Matrix& dst, std::size_t row, std::size_t cls) {
        auto r = dst.row(row);
        const auto mean = out.class_means.row(cls);
        for (std::size_t j = 0; j < spec.dims; ++j) r[j] = mean[j] + spec.noise_sigma * rng.normal();
    };

    const std::size_t n_source = spec.num_shared * spec.samples_per_class;
    out.source.features = Matrix(n_source, spec.dims);
    out.source.labels.reserve(n_source);
    std::size_t row = 0;
    for (std::size_t cls = 0; cls < spec.num_shared; ++cls) {
        for (std::size_t i = 0; i < spec.samples_per_class; ++i, ++row) {
            sample_class(out.source.features, row, cls);
            out.source.labels.push_back(static_cast<int>(cls));
        }
    }

    const std::size_t n_target = spec.num_total * spec.samples_per_class;
    out.target.features = Matrix(n_target, spec.dims);
    std::vector<int> hidden;
    hidden.reserve(n_target);
    row = 0;
    for (std::size_t cls = 0; cls < spec.num_total; ++cls) {
        for (std::size_t i = 0; i < spec.samples_per_class; ++i, ++row) {
            sample_class(out.target.features, row, cls);
            hidden.push_back(static_cast<int>(cls));
        }
    }
    out.target.hidden_labels = std::move(hidden);

    const auto t_target = resolve_translation(spec.translate, spec.dims, "translate");
    apply_affine(out.target.features, spec.rotation_deg, spec.scale, t_target);

    if (!spec.source_translate.empty()) {
        const auto t_source = resolve_translation(spec.source_translate, spec.dims, "source_translate");
        apply_affine(out.source.features, 0.0, 1.0, t_source);
    }

    return out;
}

namespace {
constexpr std::array<std::string_view, 12> kShiftKeys = {
    "classes",   "shared_classes", "dims",      "samples_per_class",
    "class_sep", "min_class_sep",  "noise_sigma", "rotation_deg",
    "scale",     "translate",      "source_translate", "seed"};
}

ShiftSpec shift_spec_from_config(const KvConfig& cfg) {
    cfg.require_known_keys(kShiftKeys);
    ShiftSpec defaults;
    ShiftSpec spec;
    spec.num_total = cfg.get_size("classes", defaults.num_total);
    spec.num_shared = cfg.get_size("shared_classes", defaults.num_shared);
    spec.dims = cfg.get_size("dims", defaults.dims);
    spec.samples_per_class = cfg.get_size("samples_per_class", defaults.samples_per_class);
    spec.class_sep = cfg.get_double("class_sep", defaults.class_sep);
    spec.min_class_sep = cfg.get_double("min_class_sep", defaults.min_class_sep);
    spec.noise_sigma = cfg.get_double("noise_sigma", defaults.noise_sigma);
    spec.rotation_deg = cfg.get_double("rotation_deg", defaults.rotation_deg);
    spec.scale = cfg.get_double("scale", defaults.scale);
    spec.translate = cfg.get_doubles("translate", defaults.translate);
    spec.source_translate = cfg.get_doubles("source_translate", defaults.source_translate);
    spec.seed = cfg.get_u64("seed", defaults.seed);
    spec.validate();
    return spec;
}

KvConfig shift_spec_to_config(const ShiftSpec& spec) {
    KvConfig cfg;
    cfg.set_size("classes", spec.num_total);
    cfg.set_size("shared_classes", spec.num_shared);
    cfg.set_size("dims", spec.dims);
    cfg.set_size("samples_per_class", spec.samples_per_class);
    cfg.set_double("class_sep", spec.class_sep);
    cfg.set_double("min_class_sep", spec.min_class_sep);
    cfg.set_double("noise_sigma", spec.noise_sigma);
    cfg.set_double("rotation_deg", spec.rotation_deg);
    cfg.set_double("scale", spec.scale);
    if (!spec.translate.empty()) cfg.set_doubles("translate", spec.translate);
    if (!spec.source_translate.empty()) cfg.set_doubles("source_translate", spec.source_translate);
    cfg.set_u64("seed", spec.seed);
    return cfg;
}

ShiftSpec load_shift_spec(const std::filesystem::path& path) {
    return shift_spec_from_config(KvConfig::parse_file(path));
}

}  // namespace osda
