#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "vti/errors.hpp"
#include "vti/image.hpp"
#include "vti/objective.hpp"
#include "vti/ordinality.hpp"
#include "vti/rng.hpp"
#include "vti/simulate.hpp"

using namespace vti;

namespace {

ImageGrid random_image(int h, int w, int c, std::uint64_t seed, double lo = 0.0,
                       double hi = 1.0) {
    rng::Stream rs(seed);
    ImageGrid img(h, w, c);
    for (double& v : img.data) v = rs.uniform(lo, hi);
    return img;
}

// Central finite difference of a scalar functional in one coordinate.
template <typename F>
double fd(F&& f, ImageGrid& field, std::size_t q, double h = 1e-6) {
    const double keep = field.data[q];
    field.data[q] = keep + h;
    const double hi = f();
    field.data[q] = keep - h;
    const double lo = f();
    field.data[q] = keep;
    return (hi - lo) / (2.0 * h);
}

std::vector<PointPair> labeled_pairs(const ImageGrid& vis, const ImageGrid& thermal,
                                     std::uint64_t seed) {
    std::vector<PointPair> pairs =
        sample_point_pairs(vis.height, vis.width, 3, seed);
    return classify_pairs(to_grayscale(vis), thermal, pairs, PairClassifierConfig{});
}

}  // namespace

TEST_CASE("recon loss vanishes on an exact factorization") {
    const SceneTruth scene = make_scene(SceneKind::VoronoiSmooth, 16, 16, 2);
    const ImageGrid vis = render_visible(scene);
    const LossTerm t = recon_loss(scene.albedo, scene.shading, vis);
    CHECK(t.value == doctest::Approx(0.0));
    for (double g : t.d_albedo.data) CHECK(g == doctest::Approx(0.0));
    for (double g : t.d_shading.data) CHECK(g == doctest::Approx(0.0));
}

TEST_CASE("recon loss single-pixel oracle") {
    ImageGrid albedo(1, 1, 1, 0.5);
    ImageGrid shading(1, 1, 1, 1.0);
    ImageGrid vis(1, 1, 1, 0.3);
    const LossTerm t = recon_loss(albedo, shading, vis);
    CHECK(t.value == doctest::Approx(0.04));
    CHECK(t.d_albedo.at(0, 0) == doctest::Approx(0.4));
    CHECK(t.d_shading.at(0, 0) == doctest::Approx(0.2));
}

TEST_CASE("recon loss is quadratic in the residual and checks shapes") {
    ImageGrid albedo(2, 2, 3, 0.5);
    ImageGrid shading(2, 2, 1, 1.0);
    ImageGrid vis(2, 2, 3, 0.4);
    const double base = recon_loss(albedo, shading, vis).value;
    ImageGrid vis2(2, 2, 3, 0.3);  // doubled residual
    CHECK(recon_loss(albedo, shading, vis2).value == doctest::Approx(4.0 * base));

    CHECK_THROWS_AS(recon_loss(albedo, shading, ImageGrid(2, 2, 1, 0.4)), invalid_input);
    CHECK_THROWS_AS(recon_loss(albedo, ImageGrid(2, 3, 1, 1.0), vis), invalid_input);
}

TEST_CASE("recon gradients match finite differences") {
    ImageGrid albedo = random_image(5, 4, 3, 11, 0.2, 0.8);
    ImageGrid shading = random_image(5, 4, 1, 12, 0.3, 1.0);
    const ImageGrid vis = random_image(5, 4, 3, 13);
    const LossTerm t = recon_loss(albedo, shading, vis);
    auto f = [&] { return recon_loss(albedo, shading, vis).value; };
    for (std::size_t q = 0; q < albedo.size(); q += 7)
        CHECK(t.d_albedo.data[q] == doctest::Approx(fd(f, albedo, q)).epsilon(1e-6));
    for (std::size_t q = 0; q < shading.size(); q += 3)
        CHECK(t.d_shading.data[q] == doctest::Approx(fd(f, shading, q)).epsilon(1e-6));
}

TEST_CASE("edge loss penalizes only the labeled field") {
    const int n = 5;
    ImageGrid flat(n, n, 1, 0.5);
    ImageGrid ramp(n, n, 1);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) ramp.at(y, x) = 0.1 * x;

    EdgeLabelMap all_shading(n, n);
    std::fill(all_shading.labels.begin(), all_shading.labels.end(), EdgeClass::Shading);

    // Shading labels constrain the albedo gradient; a flat albedo is free.
    CHECK(edge_loss(flat, ramp, all_shading).value == doctest::Approx(0.0));

    // One interior Shading pixel on an albedo ramp of slope 0.1 adds 0.01/N.
    EdgeLabelMap one(n, n);
    one.at(2, 2) = EdgeClass::Shading;
    const LossTerm t = edge_loss(ramp, flat, one);
    CHECK(t.value == doctest::Approx(0.01 / (n * n)));
    for (double g : t.d_shading.data) CHECK(g == 0.0);

    EdgeLabelMap none(n, n);
    CHECK(edge_loss(ramp, ramp, none).value == 0.0);
}

TEST_CASE("edge loss is symmetric under swapping labels and fields") {
    const ImageGrid a = random_image(7, 6, 1, 3);
    const ImageGrid s = random_image(7, 6, 1, 4);
    rng::Stream rs(5);
    EdgeLabelMap labels(7, 6);
    EdgeLabelMap swapped(7, 6);
    for (std::size_t i = 0; i < labels.labels.size(); ++i) {
        const int pick = rs.uniform_int(0, 2);
        labels.labels[i] = static_cast<EdgeClass>(pick);
        swapped.labels[i] = labels.labels[i] == EdgeClass::Albedo ? EdgeClass::Shading
                            : labels.labels[i] == EdgeClass::Shading ? EdgeClass::Albedo
                                                                     : EdgeClass::None;
    }
    CHECK(edge_loss(a, s, labels).value == doctest::Approx(edge_loss(s, a, swapped).value));
}

TEST_CASE("edge gradients match finite differences") {
    ImageGrid a = random_image(6, 5, 1, 21);
    ImageGrid s = random_image(6, 5, 1, 22);
    rng::Stream rs(23);
    EdgeLabelMap labels(6, 5);
    for (EdgeClass& c : labels.labels) c = static_cast<EdgeClass>(rs.uniform_int(0, 2));

    const LossTerm t = edge_loss(a, s, labels);
    auto f = [&] { return edge_loss(a, s, labels).value; };
    for (std::size_t q = 0; q < a.size(); ++q) {
        CHECK(t.d_albedo.data[q] ==
              doctest::Approx(fd(f, a, q)).epsilon(1e-5).scale(1.0));
        CHECK(t.d_shading.data[q] ==
              doctest::Approx(fd(f, s, q)).epsilon(1e-5).scale(1.0));
    }
}

TEST_CASE("ordinal hinge on an equal-valued shading pair") {
    ImageGrid albedo(1, 2, 1, 0.5);
    ImageGrid shading(1, 2, 1, 0.4);
    PointPair p;
    p.i = {0, 0};
    p.j = {0, 1};
    p.label = PairLabel::SPlus;  // claims shading(i) > shading(j)
    LossWeights w;
    const LossTerm t = ordinal_loss(albedo, shading, {p}, w, 1.0, 1.0);
    CHECK(t.value == doctest::Approx(0.05));
    CHECK(t.d_shading.at(0, 0) == doctest::Approx(-1.0));
    CHECK(t.d_shading.at(0, 1) == doctest::Approx(1.0));
    for (double g : t.d_albedo.data) CHECK(g == 0.0);

    // Satisfied by a margin: zero loss, zero gradient.
    shading.at(0, 0) = 0.8;
    shading.at(0, 1) = 0.4;
    const LossTerm ok = ordinal_loss(albedo, shading, {p}, w, 1.0, 1.0);
    CHECK(ok.value == 0.0);
    for (double g : ok.d_shading.data) CHECK(g == 0.0);
}

TEST_CASE("ordinal loss averages over all pairs including None") {
    ImageGrid albedo(1, 4, 1, 0.5);
    ImageGrid shading(1, 4, 1, 0.4);
    PointPair active;
    active.i = {0, 0};
    active.j = {0, 1};
    active.label = PairLabel::SPlus;
    PointPair idle;
    idle.i = {0, 2};
    idle.j = {0, 3};
    idle.label = PairLabel::None;
    LossWeights w;
    const LossTerm one = ordinal_loss(albedo, shading, {active}, w, 1.0, 1.0);
    const LossTerm two = ordinal_loss(albedo, shading, {active, idle}, w, 1.0, 1.0);
    CHECK(two.value == doctest::Approx(0.5 * one.value));
    CHECK(two.d_shading.at(0, 0) == doctest::Approx(0.5 * one.d_shading.at(0, 0)));

    PointPair raw;
    raw.i = {0, 0};
    raw.j = {0, 1};
    CHECK_THROWS_AS(ordinal_loss(albedo, shading, {raw}, w, 1.0, 1.0), invalid_input);
    CHECK(ordinal_loss(albedo, shading, {}, w, 1.0, 1.0).value == 0.0);
}

TEST_CASE("ordinal loss is invariant to pair order") {
    const SceneTruth scene = make_scene(SceneKind::Mondrian, 20, 20, 8);
    const ImageGrid vis = render_visible(scene);
    const ImageGrid thermal = render_absorbed(scene);
    std::vector<PointPair> pairs = labeled_pairs(vis, thermal, 9);
    REQUIRE(pairs.size() > 3);

    const ImageGrid a = random_image(20, 20, 1, 31);
    const ImageGrid s = random_image(20, 20, 1, 32, -0.2, 1.0);
    LossWeights w;
    const LossTerm fwd = ordinal_loss(a, s, pairs, w, 0.7, 0.9);
    std::reverse(pairs.begin(), pairs.end());
    const LossTerm rev = ordinal_loss(a, s, pairs, w, 0.7, 0.9);
    CHECK(fwd.value == doctest::Approx(rev.value).epsilon(1e-14));
}

TEST_CASE("ordinal gradients match finite differences away from kinks") {
    const SceneTruth scene = make_scene(SceneKind::CheckerShadow, 18, 18, 40);
    const ImageGrid vis = render_visible(scene);
    const ImageGrid thermal = render_absorbed(scene);
    const std::vector<PointPair> pairs = labeled_pairs(vis, thermal, 41);

    ImageGrid a = random_image(18, 18, 1, 42);
    ImageGrid s = random_image(18, 18, 1, 43);
    LossWeights w;
    const double za = 0.8;
    const double zs = 1.1;
    const LossTerm t = ordinal_loss(a, s, pairs, w, za, zs);
    auto f = [&] { return ordinal_loss(a, s, pairs, w, za, zs).value; };

    // Mark pixels whose hinge argument sits near the kink; finite differences
    // straddle the non-smooth point there.
    std::vector<bool> skip_a(a.size(), false), skip_s(s.size(), false);
    for (const PointPair& p : pairs) {
        const std::size_t qi = a.index(p.i.y, p.i.x);
        const std::size_t qj = a.index(p.j.y, p.j.x);
        double arg = 0.0;
        bool on_albedo = false;
        switch (*p.label) {
            case PairLabel::SPlus: arg = (s.data[qj] - s.data[qi]) / zs + w.margin; break;
            case PairLabel::SMinus: arg = (s.data[qi] - s.data[qj]) / zs + w.margin; break;
            case PairLabel::APlus:
                arg = (a.data[qj] - a.data[qi]) / za + w.margin;
                on_albedo = true;
                break;
            case PairLabel::AMinus:
                arg = (a.data[qi] - a.data[qj]) / za + w.margin;
                on_albedo = true;
                break;
            case PairLabel::None: continue;
        }
        if (std::abs(arg) < 1e-4) {
            (on_albedo ? skip_a : skip_s)[qi] = true;
            (on_albedo ? skip_a : skip_s)[qj] = true;
        }
    }
    for (std::size_t q = 0; q < a.size(); ++q) {
        if (!skip_a[q])
            CHECK(t.d_albedo.data[q] ==
                  doctest::Approx(fd(f, a, q)).epsilon(1e-5).scale(1.0));
        if (!skip_s[q])
            CHECK(t.d_shading.data[q] ==
                  doctest::Approx(fd(f, s, q)).epsilon(1e-5).scale(1.0));
    }
}

TEST_CASE("nonneg penalty activates only on negative shading") {
    ImageGrid ok(3, 3, 1, 0.2);
    const LossTerm t0 = nonneg_penalty(ok);
    CHECK(t0.value == 0.0);
    for (double g : t0.d_shading.data) CHECK(g == 0.0);

    ImageGrid mixed(3, 3, 1, 0.2);
    mixed.at(1, 1) = -0.1;
    const LossTerm t1 = nonneg_penalty(mixed);
    CHECK(t1.value == doctest::Approx(0.01 / 9.0));
    CHECK(t1.d_shading.at(1, 1) == doctest::Approx(-2.0 * 0.1 / 9.0));
    CHECK(t1.d_shading.at(0, 0) == 0.0);

    // The squared hinge is differentiable at zero with derivative 0.
    ImageGrid zero(1, 1, 1, 0.0);
    CHECK(nonneg_penalty(zero).d_shading.at(0, 0) == 0.0);
}

TEST_CASE("total objective recombines the four weighted terms") {
    const SceneTruth scene = make_scene(SceneKind::ColorChart, 20, 22, 50);
    const ImageGrid vis = render_visible(scene);
    const ImageGrid thermal = render_absorbed(scene);

    ObjectiveData data;
    data.visible = vis;
    data.edges = classify_edges(to_grayscale(vis), thermal, EdgeClassifierConfig{});
    data.pairs = labeled_pairs(vis, thermal, 51);
    data.z_albedo = 0.9;
    data.z_shading = 1.2;

    ImageGrid albedo = random_image(20, 22, 3, 52, 0.1, 0.9);
    ImageGrid shading = random_image(20, 22, 1, 53, -0.1, 1.1);
    LossWeights w;
    w.lambda_recon = 0.7;
    w.lambda_edge = 1.3;
    w.lambda_ord = 0.4;
    w.lambda_nonneg = 5.0;

    const LossReport r = total_objective(albedo, shading, data, w);
    const ImageGrid gray = to_grayscale(albedo);
    const double expect = w.lambda_recon * recon_loss(albedo, shading, vis).value +
                          w.lambda_edge * edge_loss(gray, shading, data.edges).value +
                          w.lambda_ord *
                              ordinal_loss(gray, shading, data.pairs, w, 0.9, 1.2).value +
                          w.lambda_nonneg * nonneg_penalty(shading).value;
    CHECK(r.total == doctest::Approx(expect).epsilon(1e-12));
    CHECK(r.recon > 0.0);
    CHECK(r.edge > 0.0);
    CHECK(r.ordinal > 0.0);
}

TEST_CASE("total objective on the exact decomposition with consistent labels is zero") {
    // Noise-free rendering: reconstruction is exact, every edge label agrees
    // with the true fields, and every hinge is satisfied beyond the margin by
    // construction of the classifier thresholds (0.05 >= margin).
    const SceneTruth scene = make_scene(SceneKind::Mondrian, 24, 24, 60);
    const ImageGrid vis = render_visible(scene);
    const ImageGrid thermal = render_absorbed(scene);

    ObjectiveData data;
    data.visible = vis;
    EdgeClassifierConfig ecfg;
    ecfg.thermal_blur_sigma = 0.0;
    data.edges = classify_edges(to_grayscale(vis), thermal, ecfg);
    data.pairs = labeled_pairs(vis, thermal, 61);
    data.z_albedo = 1.0;
    data.z_shading = 1.0;

    LossWeights w;
    const LossReport r = total_objective(scene.albedo, scene.shading, data, w);
    CHECK(r.recon == doctest::Approx(0.0));
    CHECK(r.nonneg == 0.0);

    // Mondrian shading is constant, so shading gradients vanish and Albedo
    // labels cost nothing; Shading labels never fire on a flat thermal field.
    CHECK(r.edge == doctest::Approx(0.0));
    CHECK(r.ordinal == doctest::Approx(0.0));
    CHECK(r.total == doctest::Approx(0.0));
}

TEST_CASE("total objective gradients spread the grayscale chain over channels") {
    ImageGrid albedo = random_image(8, 8, 3, 70, 0.2, 0.8);
    ImageGrid shading = random_image(8, 8, 1, 71, 0.2, 1.0);
    ObjectiveData data;
    data.visible = random_image(8, 8, 3, 72);
    data.edges = EdgeLabelMap(8, 8);
    rng::Stream rs(73);
    for (EdgeClass& c : data.edges.labels) c = static_cast<EdgeClass>(rs.uniform_int(0, 2));

    LossWeights w;
    w.lambda_recon = 0.0;  // isolate the grayscale-coupled term
    w.lambda_nonneg = 0.0;
    const LossReport r = total_objective(albedo, shading, data, w);
    auto f = [&] { return total_objective(albedo, shading, data, w).total; };
    for (std::size_t q = 0; q < albedo.size(); q += 5)
        CHECK(r.d_albedo.data[q] ==
              doctest::Approx(fd(f, albedo, q)).epsilon(1e-5).scale(1.0));

    CHECK_THROWS_AS([&] {
        LossWeights bad;
        bad.lambda_edge = -1.0;
        bad.validate();
    }(), invalid_input);
    CHECK_THROWS_AS([&] {
        LossWeights bad;
        bad.margin = -0.1;
        bad.validate();
    }(), invalid_input);
}
