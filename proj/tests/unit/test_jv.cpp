#include <doctest.h>

#include <cmath>
#include <fstream>

#include "degbench/error.hpp"
#include "degbench/jv.hpp"
#include "test_util.hpp"

using namespace degbench;

namespace {

// Raw sweep of J(V) = -j0 (1 - V / voc): photocurrent negative.
JVCurve linear_curve(double j0, double voc, double vmin, double vmax, int n, double g = 100.0) {
    JVCurve c;
    c.irradiance = g;
    for (int i = 0; i < n; ++i) {
        const double v = vmin + (vmax - vmin) * i / (n - 1);
        c.voltage.push_back(v);
        c.current_density.push_back(-j0 * (1.0 - v / voc));
    }
    return c;
}

JVCurve diode_curve(int n) {
    JVCurve c;
    for (int i = 0; i < n; ++i) {
        const double v = -0.1 + 0.8 * i / (n - 1);
        c.voltage.push_back(v);
        c.current_density.push_back(-(9.5 - 1e-7 * (std::exp(v / 0.026) - 1.0)));
    }
    return c;
}

// Maximum power of the piecewise-linear interpolant by dense scanning.
double scanned_pmpp(const JVCurve& c) {
    double best = 0;
    for (std::size_t s = 0; s + 1 < c.voltage.size(); ++s) {
        for (int k = 0; k <= 20000; ++k) {
            const double t = k / 20000.0;
            const double v = c.voltage[s] + t * (c.voltage[s + 1] - c.voltage[s]);
            const double j = -(c.current_density[s] + t * (c.current_density[s + 1] - c.current_density[s]));
            if (v > 0 && j > 0) best = std::max(best, v * j);
        }
    }
    return best;
}

}  // namespace

TEST_CASE("closed-form linear curve") {
    const auto p = extract_params(linear_curve(10, 0.5, -0.1, 0.6, 8));
    CHECK(p.jsc == doctest::Approx(10).epsilon(1e-12));
    CHECK(p.voc == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(p.pmpp == doctest::Approx(1.25).epsilon(1e-12));
    CHECK(p.vmpp == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(p.ff == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(p.pce == doctest::Approx(0.0125).epsilon(1e-12));
    CHECK(p.pce * 100 == doctest::Approx(1.25).epsilon(1e-12));
}

TEST_CASE("exact sample at V = 0") {
    JVCurve c{{-0.2, 0.0, 0.3, 0.7}, {-12.5, -12.0, -8.0, 1.0}, 100.0};
    CHECK(extract_params(c).jsc == 12.0);
}

TEST_CASE("both forms of the efficiency equation agree") {
    // jsc=10, voc=0.6, ff=0.6 at G=100 gives 3.6 %.
    CHECK(10 * 0.6 * 0.6 / 100 == doctest::Approx(0.036).epsilon(1e-12));
    for (int n : {5, 9, 31}) {
        const auto p = extract_params(diode_curve(n));
        CHECK(std::fabs(p.pce - p.jsc * p.voc * p.ff / 100.0) / p.pce < 1e-9);
        CHECK(p.ff > 0);
        CHECK(p.ff <= 1);
        CHECK(p.pmpp <= p.jsc * p.voc);
    }
}

TEST_CASE("pmpp is the maximum of the interpolant") {
    for (int n : {6, 11, 41}) {
        const auto c = diode_curve(n);
        const auto p = extract_params(c);
        const double scanned = scanned_pmpp(c);
        CHECK(p.pmpp >= scanned * (1 - 1e-12));
        CHECK(p.pmpp <= scanned * (1 + 1e-6));
    }
}

TEST_CASE("scaling J scales jsc, pmpp, pce and leaves voc, ff unchanged") {
    const auto c = diode_curve(17);
    const auto p = extract_params(c);
    for (double k : {0.1, 2.0, 37.0}) {
        auto s = c;
        for (auto& j : s.current_density) j *= k;
        const auto q = extract_params(s);
        CHECK(std::fabs(q.jsc - k * p.jsc) / (k * p.jsc) < 1e-9);
        CHECK(std::fabs(q.pmpp - k * p.pmpp) / (k * p.pmpp) < 1e-9);
        CHECK(std::fabs(q.pce - k * p.pce) / (k * p.pce) < 1e-9);
        CHECK(std::fabs(q.voc - p.voc) / p.voc < 1e-9);
        CHECK(std::fabs(q.ff - p.ff) / p.ff < 1e-9);
    }
}

TEST_CASE("inserting collinear samples changes nothing") {
    const auto c = diode_curve(9);
    auto dense = c;
    dense.voltage.clear();
    dense.current_density.clear();
    for (std::size_t i = 0; i + 1 < c.voltage.size(); ++i) {
        for (double t : {0.0, 0.3, 0.5}) {
            dense.voltage.push_back(c.voltage[i] + t * (c.voltage[i + 1] - c.voltage[i]));
            dense.current_density.push_back(c.current_density[i] +
                                            t * (c.current_density[i + 1] - c.current_density[i]));
        }
    }
    dense.voltage.push_back(c.voltage.back());
    dense.current_density.push_back(c.current_density.back());
    const auto a = extract_params(c);
    const auto b = extract_params(dense);
    CHECK(b.jsc == doctest::Approx(a.jsc).epsilon(1e-12));
    CHECK(b.voc == doctest::Approx(a.voc).epsilon(1e-12));
    CHECK(b.pmpp == doctest::Approx(a.pmpp).epsilon(1e-12));
    CHECK(b.ff == doctest::Approx(a.ff).epsilon(1e-12));
}

TEST_CASE("positive photocurrent convention") {
    auto c = linear_curve(10, 0.5, 0.0, 0.6, 7);
    for (auto& j : c.current_density) j = -j;
    const auto p = extract_params(c, PhotocurrentSign::positive);
    CHECK(p.pmpp == doctest::Approx(1.25).epsilon(1e-12));
}

TEST_CASE("error cases") {
    auto kind = [](const JVCurve& c) {
        try {
            (void)extract_params(c);
        } catch (const Error& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    // Dead cell: photocurrent never reaches zero.
    CHECK(kind(linear_curve(10, 5.0, 0.0, 0.6, 7)).find("no zero crossing") != std::string::npos);
    // Wrong sign: no power-producing quadrant.
    auto flipped = linear_curve(10, 0.5, 0.0, 0.6, 7);
    for (auto& j : flipped.current_density) j = -j;
    CHECK(kind(flipped).find("no power-producing quadrant") != std::string::npos);
    CHECK(kind(JVCurve{{0.0, 0.1}, {-1, 1}, 100}).find("at least 3") != std::string::npos);
    CHECK(kind(JVCurve{{0.0, 0.2, 0.1}, {-1, 0, 1}, 100}).find("strictly increasing") != std::string::npos);
    CHECK(kind(JVCurve{{0.1, 0.2, 0.3}, {-1, 0, 1}, 100}).find("V = 0") != std::string::npos);
    CHECK(kind(JVCurve{{0.0, 0.2, 0.3}, {-1, 0, 1}, 0}).find("irradiance") != std::string::npos);
}

TEST_CASE("directory batch extraction") {
    const auto dir = testutil::scratch("jv");
    auto write = [&](const std::string& name, const JVCurve& c) {
        std::ofstream out(dir / name);
        out << "voltage,current_density\n";
        for (std::size_t i = 0; i < c.voltage.size(); ++i)
            out << c.voltage[i] << "," << c.current_density[i] << "\n";
    };
    write("CellB_10.csv", linear_curve(8, 0.5, 0.0, 0.6, 7));
    write("CellA_30.csv", linear_curve(9, 0.5, 0.0, 0.6, 7));
    write("CellA_2.csv", linear_curve(10, 0.5, 0.0, 0.6, 7));
    write("notes.txt", linear_curve(1, 0.5, 0.0, 0.6, 7));
    const auto recs = extract_directory(dir, 100.0);
    REQUIRE(recs.size() == 3);
    CHECK(recs[0].cell == "CellA");
    CHECK(recs[0].day == 2);
    CHECK(recs[1].day == 30);
    CHECK(recs[2].cell == "CellB");
    CHECK(recs[0].params.pmpp == doctest::Approx(2.5 * 0.5).epsilon(1e-9));
    CHECK(jv_records_csv(recs).rfind("cell,day,jsc,voc,pmpp,vmpp,ff,pce\n", 0) == 0);
}
