#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <type_traits>

#include "osda/errors.hpp"
#include "osda/inheritability.hpp"
#include "osda/numeric.hpp"
#include "osda/vendor.hpp"
#include "testutil.hpp"

using namespace osda;

namespace {

InheritableModel zeroed_model(std::size_t num_shared, std::size_t k) {
    NetworkSpec spec;
    spec.input_dim = 2;
    spec.m_dims = {4};
    spec.e_dims = {3};
    spec.num_shared = num_shared;
    spec.num_negative = k;
    Rng rng(1);
    InheritableModel model = init_model(spec, rng);
    for (auto& layer : model.m.layers) {
        scale_inplace(layer.w, 0.0);
        scale_inplace(layer.b, 0.0);
    }
    for (auto& layer : model.e.layers) {
        scale_inplace(layer.w, 0.0);
        scale_inplace(layer.b, 0.0);
    }
    scale_inplace(model.g_s.w, 0.0);
    scale_inplace(model.g_s.b, 0.0);
    scale_inplace(model.g_n.w, 0.0);
    scale_inplace(model.g_n.b, 0.0);
    return model;
}

InheritableModel trained_benchmark_model(std::uint64_t seed, const LabeledSet& source) {
    return train_vendor(testutil::benchmark_arch(2), source,
                        testutil::benchmark_vendor_config(seed));
}

}  // namespace

TEST_CASE("instance_weights: uniform softmax floor on the zero model") {
    // 10 shared, 40 negative: every coordinate gets 1/50.
    const InheritableModel model = zeroed_model(10, 40);
    const Matrix x = Matrix::from_rows({{1.0, 2.0}, {-3.0, 0.5}});
    const auto w = instance_weights(model, x);
    for (double v : w) CHECK(v == doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("instance_weights: saturated shared logit drives w toward 1") {
    InheritableModel model = zeroed_model(3, 4);
    model.g_s.b(0, 1) = 500.0;  // bias effectively saturates the softmax
    const auto w = instance_weights(model, Matrix::from_rows({{0.0, 0.0}}));
    CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("instance_weights: agrees with a direct softmax-then-max oracle") {
    Rng rng(19);
    NetworkSpec spec;
    spec.input_dim = 4;
    spec.m_dims = {6};
    spec.e_dims = {5};
    spec.num_shared = 3;
    spec.num_negative = 5;
    const InheritableModel model = init_model(spec, rng);
    const Matrix x = testutil::random_matrix(12, 4, rng);

    const auto w = instance_weights(model, x);
    const ForwardTaps taps = forward(model, x);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        // Recompute independently: exp-normalize the concatenated row.
        std::vector<double> row;
        for (double v : taps.logits_s.row(i)) row.push_back(v);
        for (double v : taps.logits_n.row(i)) row.push_back(v);
        double mx = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (double v : row) z += std::exp(v - mx);
        double best_shared = 0.0;
        for (std::size_t c = 0; c < spec.num_shared; ++c) {
            best_shared = std::max(best_shared, std::exp(row[c] - mx) / z);
        }
        CHECK(w[i] == doctest::Approx(best_shared).epsilon(1e-12));
        CHECK(w[i] > 0.0);
        CHECK(w[i] < 1.0);
        CHECK(w[i] >= 1.0 / static_cast<double>(spec.num_outputs()) - 1e-12);
    }
}

TEST_CASE("instance_weights: invariant under per-row logit shifts") {
    // Shifting every head bias by the same constant shifts all concatenated
    // logits per row; w must not move.
    Rng rng(23);
    NetworkSpec spec;
    spec.input_dim = 3;
    spec.m_dims = {5};
    spec.e_dims = {4};
    spec.num_shared = 2;
    spec.num_negative = 3;
    InheritableModel model = init_model(spec, rng);
    const Matrix x = testutil::random_matrix(6, 3, rng);
    const auto w1 = instance_weights(model, x);
    for (double& v : model.g_s.b.data()) v += 12.5;
    for (double& v : model.g_n.b.data()) v += 12.5;
    const auto w2 = instance_weights(model, x);
    for (std::size_t i = 0; i < w1.size(); ++i) {
        CHECK(w1[i] == doctest::Approx(w2[i]).epsilon(1e-9));
    }
}

TEST_CASE("normalize_by_max: max becomes one and ranks are preserved") {
    Rng rng(29);
    std::vector<double> w(40);
    for (double& v : w) v = rng.uniform(0.01, 0.99);
    const auto norm = normalize_by_max(w);
    CHECK(*std::max_element(norm.begin(), norm.end()) == doctest::Approx(1.0).epsilon(1e-15));
    for (std::size_t i = 0; i < w.size(); ++i) {
        for (std::size_t j = 0; j < w.size(); ++j) {
            CHECK((w[i] < w[j]) == (norm[i] < norm[j]));
        }
    }
    CHECK_THROWS_AS(normalize_by_max(std::vector<double>{}), input_error);
}

TEST_CASE("weigh_instances: ties raw and normalized weights together") {
    Rng rng(31);
    NetworkSpec spec;
    spec.input_dim = 2;
    spec.m_dims = {4};
    spec.e_dims = {3};
    spec.num_shared = 2;
    spec.num_negative = 2;
    const InheritableModel model = init_model(spec, rng);
    const Matrix x = testutil::random_matrix(10, 2, rng);
    const std::vector<std::size_t> batch{1, 4, 7};
    const WeightedInstances wi = weigh_instances(model, x, batch);
    REQUIRE(wi.raw_w.size() == 3);
    const double mx = *std::max_element(wi.raw_w.begin(), wi.raw_w.end());
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(wi.normalized_w[i] == doctest::Approx(wi.raw_w[i] / mx).epsilon(1e-15));
    }
}

TEST_CASE("model_inheritability: the vendor's own source scores exactly 1") {
    const GeneratedPair pair = generate_pair(testutil::benchmark_spec(3));
    const InheritableModel model = trained_benchmark_model(3, pair.source);
    const double i_self = model_inheritability(model, pair.source.features);
    CHECK(i_self == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_THROWS_AS(model_inheritability(model, Matrix{}), input_error);
}

TEST_CASE("model_inheritability: monotone non-increasing under growing translation") {
    // Same class layout, target translated by 0, 1 and 2 sigma; the median
    // over seeds must order the inheritability accordingly.
    std::vector<double> i_at_delta[3];
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        ShiftSpec spec = testutil::benchmark_spec(seed);
        spec.rotation_deg = 0.0;
        const GeneratedPair base = generate_pair(spec);
        const InheritableModel model = trained_benchmark_model(seed, base.source);
        for (int k = 0; k < 3; ++k) {
            ShiftSpec moved = spec;
            if (k > 0) moved.translate = {static_cast<double>(k)};
            const GeneratedPair pair = generate_pair(moved);
            i_at_delta[k].push_back(model_inheritability(model, pair.target.features));
        }
    }
    const double i0 = testutil::median(i_at_delta[0]);
    const double i1 = testutil::median(i_at_delta[1]);
    const double i2 = testutil::median(i_at_delta[2]);
    CHECK(i0 >= i1);
    CHECK(i1 >= i2);
}

TEST_CASE("model_inheritability: far-out-of-distribution noise scores lower") {
    const GeneratedPair pair = generate_pair(testutil::benchmark_spec(7));
    const InheritableModel model = trained_benchmark_model(7, pair.source);

    Rng rng(99);
    Matrix noise(400, 2);
    for (double& v : noise.data()) v = 40.0 + 5.0 * rng.normal();
    const double i_noise = model_inheritability(model, noise);
    const double i_target = model_inheritability(model, pair.target.features);
    CHECK(i_noise < i_target);
}

TEST_CASE("ordering_diagnostic: zero model degenerates to the uniform floor") {
    const InheritableModel model = zeroed_model(4, 16);
    const Matrix any = Matrix::from_rows({{0.0, 0.0}, {1.0, 1.0}});
    const OrderingDiagnostic d = ordering_diagnostic(model, any, any, any);
    CHECK(d.mean_source == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(d.mean_target_shared == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(d.mean_target_unknown == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("ordering_diagnostic: identical sets give identical means") {
    const GeneratedPair pair = generate_pair(testutil::benchmark_spec(9));
    const InheritableModel model = trained_benchmark_model(9, pair.source);
    const OrderingDiagnostic d = ordering_diagnostic(model, pair.source.features,
                                                     pair.source.features, pair.target.features);
    CHECK(d.mean_source == d.mean_target_shared);
}

TEST_CASE("ordering_diagnostic: trained model orders source >= shared >= unknown") {
    const GeneratedPair pair = generate_pair(testutil::benchmark_spec(11));
    const InheritableModel model = trained_benchmark_model(11, pair.source);

    const auto& hidden = *pair.target.hidden_labels;
    const Matrix shared =
        testutil::rows_matching(pair.target.features, hidden, [](int l) { return l < 4; });
    const Matrix unknown =
        testutil::rows_matching(pair.target.features, hidden, [](int l) { return l >= 4; });
    const OrderingDiagnostic d =
        ordering_diagnostic(model, pair.source.features, shared, unknown);
    CHECK(d.mean_source >= d.mean_target_shared);
    CHECK(d.mean_target_shared >= d.mean_target_unknown);
}

// The call sites that compute inheritability accept bare feature matrices:
// there is no way to hand them a labeled source set.
static_assert(std::is_invocable_v<decltype(model_inheritability), const InheritableModel&,
                                  const Matrix&>);
static_assert(!std::is_invocable_v<decltype(model_inheritability), const InheritableModel&,
                                   const LabeledSet&>);
