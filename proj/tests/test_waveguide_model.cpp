#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "wgt/errors.hpp"
#include "wgt/model_io.hpp"
#include "wgt/waveguide.hpp"

using namespace wgt;
constexpr double pi = std::numbers::pi;

TEST_CASE("interval modes") {
    const auto m = transverse_modes(CrossSection::interval(pi), 3);
    REQUIRE(m.size() == 3);
    CHECK(m[0].eigenvalue == doctest::Approx(1.0));
    CHECK(m[1].eigenvalue == doctest::Approx(4.0));
    CHECK(m[2].eigenvalue == doctest::Approx(9.0));
}

TEST_CASE("square cross-section modes and degenerate group") {
    const auto m = transverse_modes(CrossSection::rectangle(pi, pi), 4);
    REQUIRE(m.size() == 4);
    CHECK(m[0].eigenvalue == doctest::Approx(2.0));
    CHECK(m[1].eigenvalue == doctest::Approx(5.0));
    CHECK(m[2].eigenvalue == doctest::Approx(5.0));
    CHECK(m[3].eigenvalue == doctest::Approx(8.0));
    CHECK(m[1].quantum == std::array<int, 2>{1, 2});
    CHECK(m[2].quantum == std::array<int, 2>{2, 1});
    const auto g = threshold_groups(m);
    REQUIRE(g.size() == 3);
    CHECK(g[1].members.size() == 2);
    const auto gi = threshold_groups(transverse_modes(CrossSection::interval(pi), 5));
    CHECK(gi.size() == 5);
}

TEST_CASE("custom cross-section validation") {
    // two-point rule on (0, 2) with orthonormal vectors
    const std::vector<double> nodes{0.5, 1.5}, w{1.0, 1.0};
    const double s = 1.0 / std::sqrt(2.0);
    const auto cs = CrossSection::custom(nodes, w, {1.0, 3.0}, {{s, s}, {s, -s}});
    CHECK(transverse_modes(cs, 2)[1].eigenvalue == 3.0);
    CHECK_THROWS_AS(CrossSection::custom(nodes, w, {3.0, 1.0}, {{s, s}, {s, -s}}), ModelError);
    CHECK_THROWS_AS(CrossSection::custom(nodes, w, {1.0, 3.0}, {{s, s}, {s, s}}), ModelError);
}

TEST_CASE("near-degenerate grouping follows the tolerance") {
    const double s = 1.0 / std::sqrt(2.0);
    const auto cs = CrossSection::custom({0.5, 1.5}, {1.0, 1.0}, {1.0, 1.0 + 1e-6},
                                         {{s, s}, {s, -s}});
    const auto m = transverse_modes(cs, 2);
    CHECK(threshold_groups(m, 1e-7).size() == 2);
    CHECK(threshold_groups(m, 1e-5).size() == 1);
}

TEST_CASE("potential factorization") {
    RealVector z = RealVector::Zero(4);
    const PotentialModel pz = factorize_potential(z);
    CHECK(pz.v.norm() == 0.0);
    CHECK(pz.u.minCoeff() == 1.0);
    RealVector mixed(5);
    mixed << -1.0, 2.0, 0.0, -0.25, 3.5;
    const PotentialModel pm = factorize_potential(mixed);
    for (Index i = 0; i < 5; ++i)
        CHECK(std::abs(pm.v(i) * pm.u(i) * pm.v(i) - mixed(i)) <= 4e-16 * std::abs(mixed(i)));
    CHECK(pm.u(0) == -1.0);
    CHECK(pm.u(2) == 1.0);
    RealVector bad(1);
    bad << INFINITY;
    CHECK_THROWS_AS(factorize_potential(bad), ModelError);
}

TEST_CASE("Gauss-Legendre rules") {
    std::vector<double> x, w;
    composite_rule(2, 0.0, 1.0, {}, x, w);
    REQUIRE(x.size() == 2);
    CHECK(x[0] == doctest::Approx(0.5 - 0.5 / std::sqrt(3.0)));
    CHECK(w[0] == doctest::Approx(0.5));
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += w[i] * x[i] * x[i] * x[i];
    CHECK(std::abs(s - 0.25) < 1e-15);
    composite_rule(37, -1.0, 2.0, {0.3}, x, w);
    CHECK(x.size() == 37);
    double sum = 0.0, poly = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        CHECK(w[i] > 0.0);
        sum += w[i];
        poly += w[i] * std::pow(x[i], 7);
    }
    CHECK(std::abs(sum - 3.0) < 1e-13);
    CHECK(std::abs(poly - (std::pow(2.0, 8) - 1.0) / 8.0) < 1e-11);
}

TEST_CASE("mode orthonormality on the transverse rules") {
    // uniform nodes are exact at n_omega = 2 n_max; Gauss panels need more
    for (int rule = 0; rule < 2; ++rule) {
        const auto cs = CrossSection::interval(pi);
        const auto pot = Potential::square_well(1.0, {0.0, 0.0}, {pi, 0.0}, 0.0, 1.0);
        const TransverseRule tr = rule == 0 ? TransverseRule::Uniform : TransverseRule::GaussLegendre;
        const int n_max = 5;
        const WaveguideModel m = make_model(cs, pot, rule == 0 ? 2 * n_max : 40, 4, tr);
        const RealMatrix f = m.mode_samples(m.modes(n_max));
        const RealMatrix gram = f * m.grid.omega_weights.asDiagonal() * f.transpose();
        CHECK((gram - RealMatrix::Identity(n_max, n_max)).norm() <= 1e-8);
    }
}

TEST_CASE("rectangle grid and well model") {
    const auto cs = CrossSection::rectangle(pi, 2.0);
    const auto pot = Potential::square_well(2.0, {1.0, 0.5}, {2.0, 1.5}, -0.5, 0.5);
    const WaveguideModel m = make_model(cs, pot, 3, 6);
    CHECK(m.grid.n_t() == 9);
    CHECK(m.dim() == 54);
    CHECK(m.factors.u.maxCoeff() == -1.0);
    CHECK(m.v_sup == doctest::Approx(std::sqrt(2.0)));
    CHECK(m.grid.omega_weights.sum() == doctest::Approx(1.0));
}

TEST_CASE("table potential respects cell breakpoints") {
    const auto pot = Potential::table({0.0, 1.0, pi}, {0.0, 0.5, 2.0}, {{-1.0, 2.0}, {0.0, 0.5}});
    const WaveguideModel m = make_model(CrossSection::interval(pi), pot, 6, 12);
    for (Index k = 0; k < m.grid.n_x(); ++k) CHECK(std::abs(m.grid.x(k) - 0.5) > 1e-6);
    CHECK(m.factors.V.minCoeff() == -1.0);
    CHECK(m.factors.V.maxCoeff() == 2.0);
    CHECK_THROWS_AS(Potential::table({0.0, 1.0}, {0.0, 1.0}, {{1.0, 2.0}}), ModelError);
}

TEST_CASE("refining n_x leaves modes and thresholds unchanged") {
    const auto cs = CrossSection::interval(pi);
    const auto pot = Potential::square_well(1.0, {1.0, 0.0}, {2.0, 0.0}, 0.0, 1.0);
    const WaveguideModel a = make_model(cs, pot, 3, 20), b = make_model(cs, pot, 3, 40);
    const auto ga = a.thresholds(6), gb = b.thresholds(6);
    REQUIRE(ga.size() == gb.size());
    for (size_t i = 0; i < ga.size(); ++i) CHECK(ga[i].value == gb[i].value);
}

TEST_CASE("tail bound selects enough modes") {
    const auto cs = CrossSection::interval(pi);
    const auto pot = Potential::square_well(1.0, {1.0, 0.0}, {2.0, 0.0}, 0.0, 1.0);
    const WaveguideModel m = make_model(cs, pot, 3, 10);
    const int n = m.modes_for_tail(4.0, 1e-3);
    CHECK(m.tail_bound(n, 4.0) <= 1e-3);
    CHECK(m.tail_bound(n - 1, 4.0) > 1e-3);
    WaveguideModel capped = m;
    capped.n_max_cap = 64;
    CHECK_THROWS_AS(capped.modes_for_tail(4.0, 1e-8), TruncationError);
}

TEST_CASE("model configuration") {
    const auto doc = nlohmann::json::parse(R"({
        "schema_version": 1,
        "cross_section": {"kind": "interval", "length": "pi"},
        "potential": {"kind": "square_well", "depth": 1.0, "omega_lo": [1.0], "omega_hi": [2.0],
                      "x_lo": 0.0, "x_hi": 1.0},
        "grid": {"n_omega": 3, "n_x": 20},
        "tail_tol": 0.01
    })");
    const auto cfg = parse_model_json(doc);
    CHECK(cfg.model.dim() == 60);
    CHECK(cfg.tail_tol == 0.01);
    CHECK(cfg.n_max == 0);
    CHECK(cfg.model.cross_section.lengths[0] == doctest::Approx(pi));
    CHECK(cfg.model.v_sup == doctest::Approx(1.0));

    CHECK(parse_length("2*pi", "x") == doctest::Approx(2.0 * pi));
    CHECK(parse_length("pi/4", "x") == doctest::Approx(0.25 * pi));
    CHECK(parse_length("3*pi/4", "x") == doctest::Approx(0.75 * pi));
    CHECK(parse_length(1.5, "x") == 1.5);
    CHECK_THROWS_AS(parse_length("tau", "x"), ParseError);
    CHECK_THROWS_AS(parse_length("2pi", "x"), ParseError);

    auto bad = doc;
    bad["grid"].erase("n_x");
    try {
        parse_model_json(bad);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("$/grid") != std::string::npos);
    }
    bad = doc;
    bad["schema_version"] = 2;
    CHECK_THROWS_AS(parse_model_json(bad), ParseError);
    bad = doc;
    bad["potential"]["kind"] = "gaussian";
    CHECK_THROWS_AS(parse_model_json(bad), ParseError);
}
