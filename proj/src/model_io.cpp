#include "osda/model_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "osda/errors.hpp"

namespace osda {

namespace {

constexpr char kVendorMagic[4] = {'I', 'N', 'H', 'M'};
constexpr char kAdaptedMagic[4] = {'I', 'N', 'H', 'T'};

std::uint64_t fnv1a(const unsigned char* data, std::size_t n) {
    std::uint64_t h = 14695981039346656037ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= data[i];
        h *= 1099511628211ull;
    }
    return h;
}

class Writer {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void raw(const char* p, std::size_t n) {
        bytes_.insert(bytes_.end(), reinterpret_cast<const unsigned char*>(p),
                      reinterpret_cast<const unsigned char*>(p) + n);
    }
    void matrix(const Matrix& m) {
        for (double v : m.data()) f64(v);
    }
    const std::vector<unsigned char>& bytes() const { return bytes_; }

private:
    std::vector<unsigned char> bytes_;
};

class Reader {
public:
    Reader(std::vector<unsigned char> bytes) : bytes_(std::move(bytes)) {}

    std::uint32_t u32(const char* field) {
        need(4, field);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64(const char* field) {
        need(8, field);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }
    std::int32_t i32(const char* field) { return static_cast<std::int32_t>(u32(field)); }
    double f64(const char* field) { return std::bit_cast<double>(u64(field)); }
    void raw(char* out, std::size_t n, const char* field) {
        need(n, field);
        std::memcpy(out, bytes_.data() + pos_, n);
        pos_ += n;
    }
    Matrix matrix(std::size_t rows, std::size_t cols, const char* field) {
        Matrix m(rows, cols);
        for (double& v : m.data()) v = f64(field);
        return m;
    }

    std::size_t pos() const { return pos_; }
    std::size_t size() const { return bytes_.size(); }
    const unsigned char* data() const { return bytes_.data(); }

private:
    void need(std::size_t n, const char* field) {
        if (pos_ + n > bytes_.size()) {
            throw format_error(std::string("model file truncated while reading ") + field);
        }
    }
    std::vector<unsigned char> bytes_;
    std::size_t pos_ = 0;
};

const char* magic_for(ModelKind kind) {
    return kind == ModelKind::vendor ? kVendorMagic : kAdaptedMagic;
}

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open model file: " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return bytes;
}

std::pair<InheritableModel, ModelKind> parse_model(std::vector<unsigned char> bytes) {
    // Checksum covers everything before the trailing u64.
    if (bytes.size() < 12) throw format_error("model file truncated while reading magic");
    Reader r(std::move(bytes));

    char magic[4];
    r.raw(magic, 4, "magic");
    ModelKind kind;
    if (std::memcmp(magic, kVendorMagic, 4) == 0) {
        kind = ModelKind::vendor;
    } else if (std::memcmp(magic, kAdaptedMagic, 4) == 0) {
        kind = ModelKind::adapted;
    } else {
        throw format_error("bad magic: not a model file");
    }

    const std::uint64_t stored = [&] {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(r.data()[r.size() - 8 + i]) << (8 * i);
        return v;
    }();
    const std::uint64_t computed = fnv1a(r.data(), r.size() - 8);
    if (stored != computed) throw format_error("checksum mismatch: model file corrupted");

    InheritableModel model;
    model.format_version = r.u32("format_version");
    if (model.format_version != kModelFormatVersion) {
        throw format_error("unsupported format_version " + std::to_string(model.format_version) +
                           " (expected " + std::to_string(kModelFormatVersion) + ")");
    }

    NetworkSpec& spec = model.spec;
    spec.input_dim = r.u32("input_dim");
    spec.m_dims.assign(r.u32("m_depth"), 0);
    for (auto& d : spec.m_dims) d = r.u32("m_dims");
    spec.e_dims.assign(r.u32("e_depth"), 0);
    for (auto& d : spec.e_dims) d = r.u32("e_dims");
    spec.num_shared = r.u32("num_shared");
    spec.num_negative = r.u32("num_negative");
    spec.validate();

    model.shared_labels.resize(spec.num_shared);
    for (int& l : model.shared_labels) l = r.i32("shared_labels");
    model.source_mean_w = r.f64("source_mean_w");

    std::size_t prev = spec.input_dim;
    for (std::size_t w : spec.m_dims) {
        model.m.layers.push_back({r.matrix(prev, w, "params_M"), r.matrix(1, w, "params_M")});
        prev = w;
    }
    prev = spec.splice_dim();
    for (std::size_t w : spec.e_dims) {
        model.e.layers.push_back({r.matrix(prev, w, "params_E"), r.matrix(1, w, "params_E")});
        prev = w;
    }
    model.g_s = {r.matrix(spec.feature_dim(), spec.num_shared, "params_Gs"),
                 r.matrix(1, spec.num_shared, "params_Gs")};
    model.g_n = {r.matrix(spec.feature_dim(), spec.num_negative, "params_Gn"),
                 r.matrix(1, spec.num_negative, "params_Gn")};

    if (r.pos() != r.size() - 8) throw format_error("trailing bytes before checksum");
    model.validate();
    return {std::move(model), kind};
}

}  // namespace

void save_model(const InheritableModel& model, const std::filesystem::path& path, ModelKind kind) {
    model.validate();
    Writer w;
    w.raw(magic_for(kind), 4);
    w.u32(model.format_version);
    w.u32(static_cast<std::uint32_t>(model.spec.input_dim));
    w.u32(static_cast<std::uint32_t>(model.spec.m_dims.size()));
    for (std::size_t d : model.spec.m_dims) w.u32(static_cast<std::uint32_t>(d));
    w.u32(static_cast<std::uint32_t>(model.spec.e_dims.size()));
    for (std::size_t d : model.spec.e_dims) w.u32(static_cast<std::uint32_t>(d));
    w.u32(static_cast<std::uint32_t>(model.spec.num_shared));
    w.u32(static_cast<std::uint32_t>(model.spec.num_negative));
    for (int l : model.shared_labels) w.i32(l);
    w.f64(model.source_mean_w);
    for (const DenseLayer& layer : model.m.layers) {
        w.matrix(layer.w);
        w.matrix(layer.b);
    }
    for (const DenseLayer& layer : model.e.layers) {
        w.matrix(layer.w);
        w.matrix(layer.b);
    }
    w.matrix(model.g_s.w);
    w.matrix(model.g_s.b);
    w.matrix(model.g_n.w);
    w.matrix(model.g_n.b);

    Writer out = w;
    out.u64(fnv1a(w.bytes().data(), w.bytes().size()));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw input_error("cannot write model file: " + path.string());
    f.write(reinterpret_cast<const char*>(out.bytes().data()),
            static_cast<std::streamsize>(out.bytes().size()));
    if (!f) throw input_error("write failed: " + path.string());
}

InheritableModel load_model(const std::filesystem::path& path, ModelKind expected) {
    auto [model, kind] = parse_model(read_all(path));
    if (kind != expected) {
        throw format_error(std::string("wrong model kind: expected magic ") +
                           std::string(magic_for(expected), 4) + ", found " +
                           std::string(magic_for(kind), 4));
    }
    return std::move(model);
}

std::pair<InheritableModel, ModelKind> load_any_model(const std::filesystem::path& path) {
    return parse_model(read_all(path));
}

}  // namespace osda
