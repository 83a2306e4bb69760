#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "wegnerlab/errors.hpp"
#include "wegnerlab/measures.hpp"

using namespace wegnerlab;

namespace {

// Window mass of the level-m Cantor approximation computed straight from its intervals.
double cantor_window_bruteforce(int level, double eps) {
    const int n = 1 << level;
    const double len = std::pow(3.0, -level);
    std::vector<double> left(n);
    for (int k = 0; k < n; ++k) {
        double x = 0.0, s = 1.0;
        for (int i = level - 1; i >= 0; --i) {
            s /= 3.0;
            if ((k >> i) & 1) x += 2 * s;
        }
        left[k] = x;
    }
    auto window = [&](double e) {
        double m = 0.0;
        for (int k = 0; k < n; ++k) {
            double ov = std::min(e + eps, left[k] + len) - std::max(e, left[k]);
            if (ov > 0) m += ov / len / n;
        }
        return m;
    };
    double best = 0.0;
    for (int k = 0; k < n; ++k) {
        for (double e : {left[k], left[k] + len - eps, left[k] - eps, left[k] + len}) best = std::max(best, window(e));
    }
    return best;
}

// Exact expectation of the conditional window-mass sup for an interior site of a stationary chain,
// by enumerating neighbour bins and integrating the conditional density p(a,x)p(x,b)/Z on a fine grid.
double markov_interior_sf_oracle(const Eigen::MatrixXd& t, double eps) {
    const int B = kMarkovBins;
    Eigen::VectorXd pi = Eigen::VectorXd::Constant(B, 1.0 / B);
    Eigen::MatrixXd p = t / B;
    for (int it = 0; it < 20000; ++it) pi = (pi.transpose() * p).transpose();
    Eigen::MatrixXd p2 = p * p;
    const int fine = 64 * 256;
    double expect = 0.0;
    for (int a = 0; a < B; ++a) {
        for (int b = 0; b < B; ++b) {
            double joint = pi[a] * p2(a, b);
            if (joint <= 0) continue;
            std::vector<double> dens(fine);
            double z = 0.0;
            for (int i = 0; i < fine; ++i) {
                int j = i / 256;
                dens[i] = t(a, j) * t(j, b);
                z += dens[i] / fine;
            }
            int wlen = static_cast<int>(std::round(eps * fine));
            double run = 0.0, best = 0.0;
            for (int i = 0; i < fine; ++i) {
                run += dens[i] / fine;
                if (i >= wlen) run -= dens[i - wlen] / fine;
                best = std::max(best, run);
            }
            expect += joint * best / z;
        }
    }
    return expect;
}

Eigen::MatrixXd skewed_kernel() {
    Eigen::MatrixXd t(kMarkovBins, kMarkovBins);
    const double pi = std::acos(-1.0);
    for (int i = 0; i < kMarkovBins; ++i) {
        for (int j = 0; j < kMarkovBins; ++j)
            t(i, j) = (1.0 + 0.5 * j / 63.0) * (1.0 + 0.3 * std::cos(2 * pi * (i - j) / kMarkovBins));
        t.row(i) *= kMarkovBins / t.row(i).sum();
    }
    return t;
}

std::vector<Measure> all_kinds() {
    return {Measure::uniform(0.0, 1.0),
            Measure::atomic({0.2, 0.7}, {0.25, 0.75}),
            Measure::cantor(6),
            Measure::polynomial(0.0, 1.0, {0.0, 6.0, -6.0}),
            Measure::empirical({0.1, 0.4, 0.45, 0.9}),
            Measure::histogram({0.0, 0.25, 0.5, 1.0}, {0.5, 0.1, 0.4})};
}

}  // namespace

TEST_CASE("sup_interval_mass frozen examples") {
    CHECK(Measure::uniform(0, 1).sup_interval_mass(0.1) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(Measure::atomic({0.0}, {1.0}).sup_interval_mass(0.5) == 1.0);
    const double eps = std::pow(3.0, -5);
    const double oracle = cantor_window_bruteforce(8, eps);
    CHECK(Measure::cantor(8).sup_interval_mass(eps) == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(oracle == doctest::Approx(1.0 / 32).epsilon(1e-12));
}

TEST_CASE("sup_interval_mass errors") {
    auto u = Measure::uniform(0, 1);
    CHECK_THROWS_AS(u.sup_interval_mass(0.0), Error);
    try {
        u.sup_interval_mass(-1.0);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::invalid_argument);
    }
    auto bad = Measure::atomic({0.0, 1.0}, {0.5, 0.4});
    try {
        bad.sup_interval_mass(0.1);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::invariant_violation);
    }
    auto badpoly = Measure::polynomial(0, 1, {2.0});
    CHECK_THROWS_AS(badpoly.sup_interval_mass(0.1), Error);
}

TEST_CASE("polynomial density window sup matches closed form") {
    auto m = Measure::polynomial(0.0, 1.0, {0.0, 6.0, -6.0});
    auto F = [](double x) { return 3 * x * x - 2 * x * x * x; };
    for (double eps : {0.01, 0.1, 0.3, 0.8}) {
        double expect = F(0.5 + eps / 2) - F(0.5 - eps / 2);
        CHECK(m.sup_interval_mass(eps) == doctest::Approx(expect).epsilon(1e-12));
    }
    CHECK(m.sup_interval_mass(1.5) == 1.0);
}

TEST_CASE("certified grid sup bounds a brute-force grid from above") {
    auto base = Measure::polynomial(0.0, 1.0, {0.0, 6.0, -6.0});
    auto m = base.log_pushforward(1.5);
    for (double eps : {0.05, 0.2}) {
        double cert = m.sup_interval_mass(eps);
        double h = eps / 4096;
        double raw = m.grid_window_sup(eps, h, 0.0);
        CHECK(cert >= raw);
        CHECK(cert - raw <= m.density_bound() * h + 1e-12);
    }
}

TEST_CASE("s_F product examples") {
    auto ten = DisorderModel::iid(Measure::uniform(0, 1), 10);
    auto v = ten.s_F(0.05);
    CHECK(v.value == doctest::Approx(0.05).epsilon(1e-14));
    CHECK_FALSE(v.monte_carlo);
    auto two = DisorderModel::product({Measure::uniform(0, 1), Measure::uniform(0, 2)}, {0, 1}, 0, 2);
    CHECK(two.s_F(0.1).value == doctest::Approx(0.1).epsilon(1e-14));
    auto empty = DisorderModel::product({Measure::uniform(0, 1)}, {}, 0, 1);
    CHECK_THROWS_AS(empty.s_F(0.1), Error);
}

TEST_CASE("s_F markov chain against quadrature of the conditional density") {
    // rho = 0.15 keeps every interior conditional density below 2 on [0,1]
    auto t = DisorderModel::cosine_kernel(0.15);
    auto chain = DisorderModel::markov(8, t, 0.0, 1.0, {3, 4});
    auto v = chain.s_F(0.1, 4096, 7);
    CHECK(v.monte_carlo);
    CHECK(v.value <= 0.2);
    double oracle = markov_interior_sf_oracle(t, 0.1);
    CHECK(std::abs(v.value - oracle) <= 4 * v.se + 1e-6);

    auto sk = skewed_kernel();
    auto chain2 = DisorderModel::markov(6, sk, 0.0, 1.0, {2});
    auto v2 = chain2.s_F(0.05, 4096, 3);
    CHECK(std::abs(v2.value - markov_interior_sf_oracle(sk, 0.05)) <= 4 * v2.se + 1e-6);
}

TEST_CASE("sample determinism and degenerate laws") {
    auto m = DisorderModel::iid(Measure::uniform(0, 1), 12);
    CHECK(m.sample(99) == m.sample(99));
    CHECK(m.sample(99) != m.sample(100));
    auto at = DisorderModel::iid(Measure::atomic({0.5}, {1.0}), 7);
    for (double x : at.sample(5)) CHECK(x == 0.5);
    auto chain = DisorderModel::markov(10, skewed_kernel(), 0, 1);
    CHECK(chain.sample(4) == chain.sample(4));
    for (double x : chain.sample(4)) {
        CHECK(x >= 0.0);
        CHECK(x <= 1.0);
    }
}

TEST_CASE("markov marginal matches the stationary law in Kolmogorov distance") {
    auto t = skewed_kernel();
    auto chain = DisorderModel::markov(6, t, 0.0, 1.0);
    // stationary bins by power iteration, independent of the library's linear solve
    Eigen::VectorXd pi = Eigen::VectorXd::Constant(kMarkovBins, 1.0 / kMarkovBins);
    for (int it = 0; it < 20000; ++it) pi = (pi.transpose() * (t / kMarkovBins)).transpose();
    auto F = [&](double x) {
        double s = 0.0;
        for (int j = 0; j < kMarkovBins; ++j) {
            double l = double(j) / kMarkovBins, r = double(j + 1) / kMarkovBins;
            if (x >= r) s += pi[j];
            else if (x > l) s += pi[j] * (x - l) * kMarkovBins;
        }
        return s;
    };
    const int n = 100000;
    std::vector<double> xs;
    xs.reserve(n);
    Rng rng(2024);
    for (int i = 0; i < n; ++i) xs.push_back(chain.sample(rng)[3]);
    std::sort(xs.begin(), xs.end());
    double ks = 0.0;
    for (int i = 0; i < n; ++i) {
        double f = F(xs[i]);
        ks = std::max({ks, std::abs(f - double(i) / n), std::abs(f - double(i + 1) / n)});
    }
    CHECK(ks < 0.02);
}

TEST_CASE("log pushforward of uniform") {
    auto u = Measure::uniform(0, 1);
    auto p = u.log_pushforward(2.0);
    CHECK(p.lo() == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(p.hi() == doctest::Approx(std::log(2.0)));
    for (double v : {0.05, 0.3, 0.6}) CHECK(p.pdf(v) == doctest::Approx(std::exp(v)).epsilon(1e-12));
    // Monte Carlo histogram against the density e^v
    Rng rng(11);
    const int n = 200000, bins = 10;
    std::vector<int> cnt(bins, 0);
    for (int i = 0; i < n; ++i) {
        double v = p.sample(rng);
        cnt[std::min(bins - 1, int(v / std::log(2.0) * bins))]++;
    }
    for (int b = 0; b < bins; ++b) {
        double l = std::log(2.0) * b / bins, r = std::log(2.0) * (b + 1) / bins;
        double expect = std::exp(r) - std::exp(l);
        double se = std::sqrt(expect * (1 - expect) / n);
        CHECK(std::abs(cnt[b] / double(n) - expect) < 5 * se);
    }
    auto model = DisorderModel::iid(u, 4);
    auto pm = model.log_pushforward(2.0);
    double lhs = pm.s_F(0.1).value;
    double rhs = model.s_F(2.0 * (std::exp(0.1) - 1.0)).value;
    CHECK(lhs == doctest::Approx(2 * (1 - std::exp(-0.1))).epsilon(1e-13));
    CHECK(lhs == doctest::Approx(0.19033).epsilon(1e-4));
    CHECK(rhs == doctest::Approx(0.21034).epsilon(1e-4));
    CHECK(lhs <= rhs);
    CHECK_THROWS_AS(model.log_pushforward(1.0), Error);
}

TEST_CASE("log pushforward of an atom") {
    auto a = Measure::atomic({0.3}, {1.0});
    auto p = a.log_pushforward(1.3);
    CHECK(p.kind() == Measure::Kind::atomic);
    CHECK(p.points().size() == 1);
    CHECK(p.points()[0] == doctest::Approx(std::log(1.0)).epsilon(1e-15));
}

TEST_CASE("monotonicity in eps for every kind") {
    for (const auto& m : all_kinds()) {
        double prev = 0.0;
        for (double eps = 1e-4; eps < 2.0; eps *= 1.7) {
            double v = m.sup_interval_mass(eps);
            CHECK(v + 1e-15 >= prev);
            prev = v;
        }
        auto p = m.log_pushforward(1.5);
        prev = 0.0;
        for (double eps = 1e-3; eps < 2.0; eps *= 2.3) {
            double v = p.sup_interval_mass(eps);
            CHECK(v + 1e-15 >= prev);
            prev = v;
        }
    }
}

TEST_CASE("window types agree for atomless laws") {
    for (const auto& m : all_kinds()) {
        if (m.has_atoms()) continue;
        for (double eps : {0.01, 0.07, 0.3}) {
            double o = m.sup_interval_mass(eps, Window::open);
            double h = eps / 512;
            double g1 = m.grid_window_sup(eps, h, 0.0, Window::left_closed);
            double g2 = m.grid_window_sup(eps, h, 0.0, Window::right_closed);
            double g3 = m.grid_window_sup(eps, h, 0.0, Window::open);
            CHECK(std::abs(g1 - g3) <= 1e-9);
            CHECK(std::abs(g2 - g3) <= 1e-9);
            CHECK(std::abs(m.sup_interval_mass(eps, Window::closed) - o) <= 1e-9);
        }
    }
    // an atom separates the window types
    auto a = Measure::atomic({0.0, 0.5}, {0.5, 0.5});
    CHECK(a.sup_interval_mass(0.5, Window::open) == 0.5);
    CHECK(a.sup_interval_mass(0.5, Window::closed) == 1.0);
}

TEST_CASE("rational grid convergence") {
    for (const auto& m : all_kinds()) {
        if (m.has_atoms()) continue;
        double D = m.density_bound();
        double eps = 0.05;
        double exact = m.sup_interval_mass(eps);
        for (double h : {1e-2, 1e-3}) {
            double a = m.grid_window_sup(eps, h, 0.0);
            double b = m.grid_window_sup(eps, h / 2, 0.0);
            double c = m.grid_window_sup(eps, h, h / 3);
            CHECK(std::abs(a - b) <= D * h);
            CHECK(std::abs(a - c) <= D * h);
            CHECK(exact + 1e-12 >= a);
            CHECK(exact - a <= D * h);
        }
    }
}

TEST_CASE("modulus vanishes along dyadic eps except for atoms") {
    for (const auto& m : all_kinds()) {
        double v = m.sup_interval_mass(std::pow(2.0, -30));
        if (m.has_atoms()) CHECK(v >= 0.25);
        else CHECK(v < 1e-6);
    }
}

TEST_CASE("pushforward inequality for every kind") {
    const double q = 1.6;
    for (const auto& m : all_kinds()) {
        auto model = DisorderModel::iid(m, 3);
        auto pm = model.log_pushforward(q);
        for (double eps : {1e-3, 1e-2, 1e-1}) {
            double lhs = pm.s_F(eps).value;
            double rhs = model.s_F((q - m.lo()) * (std::exp(eps) - 1)).value;
            CHECK(lhs <= rhs + 1e-12);
        }
    }
    auto chain = DisorderModel::markov(6, skewed_kernel(), 0.0, 1.0, {2, 3});
    auto pchain = chain.log_pushforward(2.0);
    for (double eps : {1e-2, 1e-1}) {
        auto l = pchain.s_F(eps, 4096, 1);
        auto r = chain.s_F(2.0 * (std::exp(eps) - 1), 4096, 1);
        CHECK(l.value <= r.value + 3 * (l.se + r.se));
    }
}

TEST_CASE("product rule is an exact max") {
    auto m = DisorderModel::product({Measure::uniform(0, 1), Measure::cantor(5), Measure::uniform(0, 0.5)}, {0, 1, 2},
                                    0, 1);
    for (double eps : {0.01, 0.1}) {
        double mx = std::max({Measure::uniform(0, 1).sup_interval_mass(eps), Measure::cantor(5).sup_interval_mass(eps),
                              Measure::uniform(0, 0.5).sup_interval_mass(eps)});
        CHECK(m.s_F(eps).value == mx);
    }
}
