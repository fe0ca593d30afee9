#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "osda/errors.hpp"
#include "osda/model_io.hpp"
#include "osda/network.hpp"
#include "osda/numeric.hpp"
#include "testutil.hpp"

using namespace osda;

namespace {

NetworkSpec small_spec() {
    NetworkSpec spec;
    spec.input_dim = 3;
    spec.m_dims = {5};
    spec.e_dims = {4};
    spec.num_shared = 3;
    spec.num_negative = 4;
    return spec;
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("osda_test_" + std::to_string(std::rand()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("forward: zero parameters give uniform concatenated softmax") {
    Rng rng(1);
    InheritableModel model = init_model(small_spec(), rng);
    for (auto& layer : model.m.layers) {
        scale_inplace(layer.w, 0.0);
        scale_inplace(layer.b, 0.0);
    }
    for (auto& layer : model.e.layers) {
        scale_inplace(layer.w, 0.0);
        scale_inplace(layer.b, 0.0);
    }
    scale_inplace(model.g_s.w, 0.0);
    scale_inplace(model.g_n.w, 0.0);

    const Matrix x = testutil::random_matrix(4, 3, rng);
    const ForwardTaps taps = forward(model, x);
    const Matrix p = softmax(concat_logits(taps.logits_s, taps.logits_n));
    for (std::size_t i = 0; i < p.rows(); ++i) {
        for (double v : p.row(i)) CHECK(v == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
    }
}

TEST_CASE("forward: identity layer reproduces nonnegative input") {
    NetworkSpec spec;
    spec.input_dim = 4;
    spec.m_dims = {4};
    spec.e_dims = {4};
    spec.num_shared = 2;
    spec.num_negative = 1;
    Rng rng(2);
    InheritableModel model = init_model(spec, rng);
    auto make_identity = [](Stack& s) {
        for (auto& layer : s.layers) {
            scale_inplace(layer.w, 0.0);
            scale_inplace(layer.b, 0.0);
            for (std::size_t i = 0; i < layer.w.rows(); ++i) layer.w(i, i) = 1.0;
        }
    };
    make_identity(model.m);
    make_identity(model.e);

    const Matrix x = Matrix::from_rows({{0.5, 0.0, 2.0, 1.25}});
    const ForwardTaps taps = forward(model, x);
    CHECK(taps.u == x);
    CHECK(taps.f == x);
}

TEST_CASE("forward: deterministic, row-stochastic concatenation, splice-point consistency") {
    Rng rng(3);
    const InheritableModel model = init_model(small_spec(), rng);
    const Matrix x = testutil::random_matrix(6, 3, rng);

    const ForwardTaps a = forward(model, x);
    const ForwardTaps b = forward(model, x);
    CHECK(a.logits_s == b.logits_s);
    CHECK(a.logits_n == b.logits_n);
    CHECK(a.logits_s.cols() == model.spec.num_shared);
    CHECK(a.logits_n.cols() == model.spec.num_negative);

    const Matrix p = softmax(concat_logits(a.logits_s, a.logits_n));
    for (std::size_t i = 0; i < p.rows(); ++i) {
        double sum = 0.0;
        for (double v : p.row(i)) sum += v;
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }

    // Entering at the tap reproduces the downstream taps exactly.
    const ForwardTaps from_u = forward_from_u(model, a.u);
    CHECK(from_u.f == a.f);
    CHECK(from_u.logits_s == a.logits_s);
    CHECK(from_u.logits_n == a.logits_n);

    CHECK_THROWS_AS(forward(model, testutil::random_matrix(2, 5, rng)), input_error);
    CHECK_THROWS_AS(forward_from_u(model, testutil::random_matrix(2, 3, rng)), input_error);
}

TEST_CASE("forward_from_u: zero input and zero biases give zero logits") {
    Rng rng(4);
    InheritableModel model = init_model(small_spec(), rng);
    for (auto& layer : model.e.layers) scale_inplace(layer.b, 0.0);
    scale_inplace(model.g_s.b, 0.0);
    scale_inplace(model.g_n.b, 0.0);
    const ForwardTaps taps = forward_from_u(model, Matrix(2, 5, 0.0));
    for (double v : taps.logits_s.data()) CHECK(v == 0.0);
    for (double v : taps.logits_n.data()) CHECK(v == 0.0);
}

TEST_CASE("model file: round-trip is bit-exact") {
    Rng rng(5);
    InheritableModel model = init_model(small_spec(), rng);
    model.source_mean_w = 0.4375;
    model.shared_labels = {3, 7, 9};

    TempDir dir;
    const auto path = dir.path / "model.inhm";
    save_model(model, path);
    const InheritableModel back = load_model(path);
    CHECK(back == model);

    // Byte-identical when saved again.
    save_model(back, dir.path / "model2.inhm");
    std::ifstream f1(path, std::ios::binary), f2(dir.path / "model2.inhm", std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
}

TEST_CASE("model file: kind is encoded in the magic") {
    Rng rng(6);
    const InheritableModel model = init_model(small_spec(), rng);
    TempDir dir;
    const auto path = dir.path / "model.inht";
    save_model(model, path, ModelKind::adapted);

    CHECK_THROWS_AS(load_model(path, ModelKind::vendor), format_error);
    const auto [back, kind] = load_any_model(path);
    CHECK(kind == ModelKind::adapted);
    CHECK(back == model);

    std::ifstream f(path, std::ios::binary);
    char magic[4];
    f.read(magic, 4);
    CHECK(std::string(magic, 4) == "INHT");
}

TEST_CASE("model file: corruption is rejected with the documented errors") {
    Rng rng(7);
    const InheritableModel model = init_model(small_spec(), rng);
    TempDir dir;
    const auto path = dir.path / "model.inhm";
    save_model(model, path);

    SUBCASE("truncated file fails the checksum") {
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        bytes.resize(bytes.size() - 17);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << bytes;
        out.close();
        CHECK_THROWS_AS(load_model(path), format_error);
    }

    SUBCASE("flipped payload byte fails the checksum") {
        std::fstream io(path, std::ios::binary | std::ios::in | std::ios::out);
        io.seekp(40);
        char b;
        io.seekg(40);
        io.read(&b, 1);
        b = static_cast<char>(b ^ 0x40);
        io.seekp(40);
        io.write(&b, 1);
        io.close();
        CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("checksum"), format_error);
    }

    SUBCASE("bad magic") {
        std::fstream io(path, std::ios::binary | std::ios::in | std::ios::out);
        io.seekp(0);
        io.write("XXXX", 4);
        io.close();
        CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("magic"), format_error);
    }

    SUBCASE("version bump without migration") {
        // Rewrite the version field and re-stamp the checksum so only the
        // version check can fire.
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        bytes[4] = 2;
        std::uint64_t h = 14695981039346656037ull;
        for (std::size_t i = 0; i + 8 < bytes.size(); ++i) {
            h ^= static_cast<unsigned char>(bytes[i]);
            h *= 1099511628211ull;
        }
        for (int i = 0; i < 8; ++i) {
            bytes[bytes.size() - 8 + static_cast<std::size_t>(i)] =
                static_cast<char>((h >> (8 * i)) & 0xff);
        }
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << bytes;
        out.close();
        CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("format_version"), format_error);
    }
}

TEST_CASE("NetworkSpec and model validation") {
    NetworkSpec spec = small_spec();
    spec.num_shared = 1;
    CHECK_THROWS_AS(spec.validate(), input_error);
    spec = small_spec();
    spec.num_negative = 0;
    CHECK_THROWS_AS(spec.validate(), input_error);

    Rng rng(8);
    InheritableModel model = init_model(small_spec(), rng);
    model.source_mean_w = 0.0;
    CHECK_THROWS_AS(model.validate(), input_error);
    model.source_mean_w = 1.5;
    CHECK_THROWS_AS(model.validate(), input_error);
    model.source_mean_w = 0.5;
    model.shared_labels = {1, 1, 2};
    CHECK_THROWS_AS(model.validate(), input_error);
}
