#include "wegnerlab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <tuple>

#include <unsupported/Eigen/Polynomials>

#include "wegnerlab/errors.hpp"

namespace wegnerlab {

namespace {

constexpr double kNormTol = 1e-12;

bool finite(double x) { return std::isfinite(x); }

}  // namespace

const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::invalid_argument: return "invalid-argument";
        case ErrorKind::invariant_violation: return "invariant-violation";
        case ErrorKind::resource_limit: return "resource-limit";
        case ErrorKind::unsupported_model: return "unsupported-model";
        case ErrorKind::hypothesis_failed: return "hypothesis-failed";
        case ErrorKind::precondition_violated: return "precondition-violated";
        case ErrorKind::pole_error: return "pole-error";
        case ErrorKind::forbidden_window: return "forbidden-window";
        case ErrorKind::schema_violation: return "schema-violation";
    }
    return "unknown";
}

Measure Measure::uniform(double a, double b) {
    if (!finite(a) || !finite(b) || !(a < b)) fail(ErrorKind::invalid_argument, "uniform: need a < b");
    Measure m;
    m.kind_ = Kind::uniform;
    m.lo_ = a;
    m.hi_ = b;
    return m;
}

Measure Measure::atomic(std::vector<double> points, std::vector<double> weights) {
    if (points.empty() || points.size() != weights.size())
        fail(ErrorKind::invalid_argument, "atomic: points and weights must be non-empty and equal length");
    std::vector<std::size_t> idx(points.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto i, auto j) { return points[i] < points[j]; });
    Measure m;
    m.kind_ = Kind::atomic;
    double total = 0.0;
    for (auto i : idx) {
        if (!finite(points[i]) || !finite(weights[i]) || weights[i] < 0.0)
            fail(ErrorKind::invalid_argument, "atomic: bad point or weight");
        if (!m.points_.empty() && m.points_.back() == points[i]) {
            m.weights_.back() += weights[i];
        } else {
            m.points_.push_back(points[i]);
            m.weights_.push_back(weights[i]);
        }
        total += weights[i];
    }
    m.total_ = total;
    m.lo_ = m.points_.front();
    m.hi_ = m.points_.back();
    m.cum_.assign(1, 0.0);
    for (double w : m.weights_) m.cum_.push_back(m.cum_.back() + w);
    return m;
}

Measure Measure::empirical(std::vector<double> sample) {
    if (sample.empty()) fail(ErrorKind::invalid_argument, "empirical: empty sample");
    std::vector<double> w(sample.size(), 1.0 / static_cast<double>(sample.size()));
    Measure m = atomic(std::move(sample), std::move(w));
    m.kind_ = Kind::empirical;
    m.total_ = 1.0;
    return m;
}

Measure Measure::histogram(std::vector<double> edges, std::vector<double> masses) {
    if (edges.size() < 2 || masses.size() + 1 != edges.size())
        fail(ErrorKind::invalid_argument, "histogram: need n+1 edges for n masses");
    Measure m;
    m.kind_ = Kind::histogram;
    double total = 0.0;
    for (std::size_t i = 0; i < masses.size(); ++i) {
        if (!(edges[i] < edges[i + 1]) || !finite(edges[i + 1]))
            fail(ErrorKind::invalid_argument, "histogram: edges must increase strictly");
        if (!(masses[i] >= 0.0) || !finite(masses[i])) fail(ErrorKind::invalid_argument, "histogram: bad mass");
        total += masses[i];
    }
    m.total_ = total;
    m.points_ = std::move(edges);
    m.weights_ = std::move(masses);
    m.cum_.assign(1, 0.0);
    for (double w : m.weights_) m.cum_.push_back(m.cum_.back() + w);
    m.lo_ = m.points_.front();
    m.hi_ = m.points_.back();
    return m;
}

Measure Measure::cantor(int level) {
    if (level < 0 || level > 20) fail(ErrorKind::invalid_argument, "cantor: level must be in [0, 20]");
    const std::size_t n = std::size_t{1} << level;
    const double len = std::pow(3.0, -level);
    std::vector<double> left(n);
    for (std::size_t k = 0; k < n; ++k) {
        double x = 0.0, scale = 1.0;
        for (int i = level - 1; i >= 0; --i) {
            scale /= 3.0;
            if ((k >> i) & 1U) x += 2.0 * scale;
        }
        left[k] = x;
    }
    std::vector<double> edges, masses;
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0) masses.push_back(0.0);
        edges.push_back(left[k]);
        edges.push_back(k + 1 == n ? 1.0 : left[k] + len);
        masses.push_back(1.0 / static_cast<double>(n));
    }
    Measure m = histogram(std::move(edges), std::move(masses));
    m.kind_ = Kind::cantor;
    m.level_ = level;
    return m;
}

Measure Measure::polynomial(double a, double b, std::vector<double> coeffs) {
    if (!finite(a) || !finite(b) || !(a < b)) fail(ErrorKind::invalid_argument, "polynomial: need a < b");
    if (coeffs.empty()) fail(ErrorKind::invalid_argument, "polynomial: no coefficients");
    Measure m;
    m.kind_ = Kind::polynomial;
    m.lo_ = a;
    m.hi_ = b;
    m.coeffs_ = std::move(coeffs);
    double total = 0.0;
    for (std::size_t k = 0; k < m.coeffs_.size(); ++k) total += m.coeffs_[k] / static_cast<double>(k + 1);
    m.total_ = total;
    for (int i = 0; i <= 2000; ++i) {
        double t = i / 2000.0, p = 0.0;
        for (std::size_t k = m.coeffs_.size(); k-- > 0;) p = p * t + m.coeffs_[k];
        if (p < -kNormTol) fail(ErrorKind::invariant_violation, "polynomial: density is negative");
    }
    return m;
}

Measure Measure::log_pushforward(double q) const {
    if (!finite(q) || !(q > hi_)) fail(ErrorKind::invalid_argument, "log_pushforward: need q > sup of support");
    if (has_atoms()) {
        std::vector<double> pts, w;
        for (std::size_t i = points_.size(); i-- > 0;) {
            pts.push_back(std::log(q - points_[i]));
            w.push_back(weights_[i]);
        }
        Measure m = atomic(std::move(pts), std::move(w));
        m.kind_ = kind_;
        m.total_ = total_;
        return m;
    }
    Measure m;
    m.kind_ = Kind::log_pushforward;
    m.push_q_ = q;
    m.base_ = std::make_shared<const Measure>(*this);
    m.lo_ = std::log(q - hi_);
    m.hi_ = std::log(q - lo_);
    m.total_ = total_;
    return m;
}

std::string Measure::kind_name() const {
    switch (kind_) {
        case Kind::uniform: return "uniform";
        case Kind::atomic: return "atomic";
        case Kind::cantor: return "cantor";
        case Kind::polynomial: return "polynomial";
        case Kind::empirical: return "empirical";
        case Kind::histogram: return "histogram";
        case Kind::log_pushforward: return "log_pushforward(" + base_->kind_name() + ")";
    }
    return "unknown";
}

void Measure::check_normalized() const {
    if (std::abs(total_ - 1.0) > kNormTol) {
        std::ostringstream os;
        os << kind_name() << ": total mass " << total_ << " differs from 1";
        fail(ErrorKind::invariant_violation, os.str());
    }
}

double Measure::poly_cdf_t(double t) const {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    double s = 0.0;
    for (std::size_t k = coeffs_.size(); k-- > 0;) s = s * t + coeffs_[k] / static_cast<double>(k + 1);
    return std::clamp(s * t, 0.0, 1.0);
}

double Measure::cdf(double x) const {
    switch (kind_) {
        case Kind::uniform:
            return std::clamp((x - lo_) / (hi_ - lo_), 0.0, 1.0);
        case Kind::polynomial:
            return poly_cdf_t((x - lo_) / (hi_ - lo_));
        case Kind::atomic:
        case Kind::empirical: {
            auto it = std::upper_bound(points_.begin(), points_.end(), x);
            return cum_[static_cast<std::size_t>(it - points_.begin())];
        }
        case Kind::cantor:
        case Kind::histogram: {
            if (x <= lo_) return 0.0;
            if (x >= hi_) return cum_.back();
            auto it = std::upper_bound(points_.begin(), points_.end(), x);
            std::size_t j = static_cast<std::size_t>(it - points_.begin()) - 1;
            double frac = (x - points_[j]) / (points_[j + 1] - points_[j]);
            return cum_[j] + frac * weights_[j];
        }
        case Kind::log_pushforward:
            if (x < lo_) return 0.0;
            if (x >= hi_) return base_->total_;
            return base_->total_ - base_->cdf_left(push_q_ - std::exp(x));
    }
    return 0.0;
}

double Measure::cdf_left(double x) const {
    switch (kind_) {
        case Kind::atomic:
        case Kind::empirical: {
            auto it = std::lower_bound(points_.begin(), points_.end(), x);
            return cum_[static_cast<std::size_t>(it - points_.begin())];
        }
        case Kind::log_pushforward:
            if (x <= lo_) return 0.0;
            if (x > hi_) return base_->total_;
            return base_->total_ - base_->cdf(push_q_ - std::exp(x));
        default:
            return cdf(x);
    }
}

double Measure::mass(double a, double b, Window w) const {
    if (b < a) return 0.0;
    switch (w) {
        case Window::open: return std::max(0.0, cdf_left(b) - cdf(a));
        case Window::left_closed: return std::max(0.0, cdf_left(b) - cdf_left(a));
        case Window::right_closed: return std::max(0.0, cdf(b) - cdf(a));
        case Window::closed: return std::max(0.0, cdf(b) - cdf_left(a));
    }
    return 0.0;
}

double Measure::pdf(double x) const {
    switch (kind_) {
        case Kind::uniform:
            return (x < lo_ || x > hi_) ? 0.0 : 1.0 / (hi_ - lo_);
        case Kind::polynomial: {
            if (x < lo_ || x > hi_) return 0.0;
            double t = (x - lo_) / (hi_ - lo_), p = 0.0;
            for (std::size_t k = coeffs_.size(); k-- > 0;) p = p * t + coeffs_[k];
            return std::max(0.0, p) / (hi_ - lo_);
        }
        case Kind::cantor:
        case Kind::histogram: {
            if (x < lo_ || x > hi_) return 0.0;
            auto it = std::upper_bound(points_.begin(), points_.end(), x);
            std::size_t j = std::min(static_cast<std::size_t>(it - points_.begin()), weights_.size()) - 1;
            return weights_[j] / (points_[j + 1] - points_[j]);
        }
        case Kind::log_pushforward:
            if (x < lo_ || x > hi_) return 0.0;
            return base_->pdf(push_q_ - std::exp(x)) * std::exp(x);
        case Kind::atomic:
        case Kind::empirical:
            return 0.0;
    }
    return 0.0;
}

double Measure::density_bound() const {
    switch (kind_) {
        case Kind::uniform:
            return 1.0 / (hi_ - lo_);
        case Kind::polynomial: {
            // sampled max plus a Lipschitz allowance for the gaps between samples
            const int n = 4096;
            double mx = 0.0, lip = 0.0;
            for (std::size_t k = 1; k < coeffs_.size(); ++k) lip += static_cast<double>(k) * std::abs(coeffs_[k]);
            for (int i = 0; i <= n; ++i) {
                double t = static_cast<double>(i) / n, p = 0.0;
                for (std::size_t k = coeffs_.size(); k-- > 0;) p = p * t + coeffs_[k];
                mx = std::max(mx, p);
            }
            return (mx + lip * 0.5 / n) / (hi_ - lo_);
        }
        case Kind::cantor:
        case Kind::histogram: {
            double mx = 0.0;
            for (std::size_t j = 0; j < weights_.size(); ++j)
                mx = std::max(mx, weights_[j] / (points_[j + 1] - points_[j]));
            return mx;
        }
        case Kind::log_pushforward:
            return base_->density_bound() * (push_q_ - base_->lo_);
        case Kind::atomic:
        case Kind::empirical:
            return std::numeric_limits<double>::infinity();
    }
    return std::numeric_limits<double>::infinity();
}

double Measure::quantile(double u) const {
    check_normalized();
    u = std::clamp(u, 0.0, 1.0);
    switch (kind_) {
        case Kind::uniform:
            return lo_ + u * (hi_ - lo_);
        case Kind::atomic:
        case Kind::empirical: {
            auto it = std::lower_bound(cum_.begin() + 1, cum_.end(), u * total_);
            std::size_t j = std::min(static_cast<std::size_t>(it - cum_.begin()) - 1, points_.size() - 1);
            return points_[j];
        }
        case Kind::cantor:
        case Kind::histogram: {
            double target = u * total_;
            for (std::size_t j = 0; j < weights_.size(); ++j) {
                if (weights_[j] > 0.0 && cum_[j + 1] >= target) {
                    double frac = std::clamp((target - cum_[j]) / weights_[j], 0.0, 1.0);
                    return points_[j] + frac * (points_[j + 1] - points_[j]);
                }
            }
            return hi_;
        }
        case Kind::polynomial: {
            double a = 0.0, b = 1.0;
            for (int it = 0; it < 80; ++it) {
                double mid = 0.5 * (a + b);
                (poly_cdf_t(mid) < u ? a : b) = mid;
            }
            return lo_ + 0.5 * (a + b) * (hi_ - lo_);
        }
        case Kind::log_pushforward:
            return std::clamp(std::log(push_q_ - base_->quantile(1.0 - u)), lo_, hi_);
    }
    return lo_;
}

std::vector<double> Measure::smooth_breaks() const {
    switch (kind_) {
        case Kind::atomic:
        case Kind::empirical:
        case Kind::cantor:
        case Kind::histogram:
            return points_;
        case Kind::log_pushforward: {
            std::vector<double> b;
            for (double x : base_->smooth_breaks()) b.push_back(std::log(push_q_ - x));
            std::sort(b.begin(), b.end());
            return b;
        }
        default:
            return {lo_, hi_};
    }
}

bool Measure::breakpoint_exact() const {
    // Window mass is monotone between consecutive candidates E in {b, b - eps}: either the
    // density is constant on pieces, or it is c_j e^v (pushforward of a piecewise-constant law).
    switch (kind_) {
        case Kind::uniform:
        case Kind::cantor:
        case Kind::histogram:
            return true;
        case Kind::log_pushforward: {
            auto k = base_->kind_;
            return k == Kind::uniform || k == Kind::cantor || k == Kind::histogram;
        }
        default:
            return false;
    }
}

double Measure::piecewise_linear_sup(double eps) const {
    double best = 0.0;
    for (double b : smooth_breaks()) {
        for (double e : {b, b - eps}) best = std::max(best, cdf(e + eps) - cdf(e));
    }
    return std::min(best, 1.0);
}

double Measure::atomic_sup(double eps, Window w) const {
    const bool inclusive = (w == Window::closed);
    double best = 0.0, run = 0.0;
    std::size_t j = 0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
        while (j < points_.size() &&
               (inclusive ? points_[j] - points_[i] <= eps : points_[j] - points_[i] < eps)) {
            run += weights_[j];
            ++j;
        }
        best = std::max(best, run);
        run -= weights_[i];
    }
    return std::min(best, 1.0);
}

double Measure::poly_sup(double eps) const {
    const double width = hi_ - lo_;
    if (eps >= width) return 1.0;
    const double d = eps / width;
    // window mass in t-units is G(t+d) - G(t) on [0, 1-d]; its derivative p(t+d) - p(t) is a polynomial
    const std::size_t n = coeffs_.size();
    std::vector<double> diff(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double binom = 1.0;
        for (std::size_t j = 0; j <= k; ++j) {
            // coefficient of t^j in (t+d)^k is C(k,j) d^(k-j)
            if (j > 0) binom = binom * static_cast<double>(k - j + 1) / static_cast<double>(j);
            diff[j] += coeffs_[k] * binom * std::pow(d, static_cast<double>(k - j));
        }
        diff[k] -= coeffs_[k];
    }
    double scale = 0.0;
    for (double c : diff) scale = std::max(scale, std::abs(c));
    while (!diff.empty() && std::abs(diff.back()) <= 1e-14 * std::max(scale, 1.0)) diff.pop_back();

    std::vector<double> cands{0.0, 1.0 - d};
    if (diff.size() >= 2) {
        Eigen::VectorXd c(static_cast<Eigen::Index>(diff.size()));
        for (std::size_t k = 0; k < diff.size(); ++k) c[static_cast<Eigen::Index>(k)] = diff[k];
        Eigen::PolynomialSolver<double, Eigen::Dynamic> solver;
        solver.compute(c);
        for (Eigen::Index i = 0; i < solver.roots().size(); ++i) {
            auto r = solver.roots()[i];
            if (std::abs(r.imag()) <= 1e-8 * std::max(1.0, std::abs(r.real())) && r.real() > 0.0 && r.real() < 1.0 - d)
                cands.push_back(r.real());
        }
    }
    double best = 0.0;
    for (double t : cands) best = std::max(best, poly_cdf_t(t + d) - poly_cdf_t(t));
    return std::min(best, 1.0);
}

double Measure::certified_grid_sup(double eps) const {
    const double D = density_bound();
    const double a = lo_ - eps, b = hi_;
    const double h_final = eps / 65536.0;
    const std::size_t cap = std::size_t{1} << 20;
    std::size_t n0 = 256;
    double w = (b - a) / static_cast<double>(n0);
    auto g = [&](double e) { return cdf(e + eps) - cdf(e); };
    std::vector<std::pair<double, double>> cells;
    double best = 0.0;
    for (std::size_t i = 0; i < n0; ++i) {
        double c = a + (static_cast<double>(i) + 0.5) * w;
        double v = g(c);
        cells.emplace_back(c, v);
        best = std::max(best, v);
    }
    while (true) {
        std::vector<std::pair<double, double>> kept;
        for (auto& cv : cells)
            if (cv.second + D * w * 0.5 >= best) kept.push_back(cv);
        cells.swap(kept);
        if (w <= h_final || cells.size() * 2 > cap) break;
        std::vector<std::pair<double, double>> next;
        next.reserve(cells.size() * 2);
        for (auto& cv : cells) {
            for (double c : {cv.first - 0.25 * w, cv.first + 0.25 * w}) {
                double v = g(c);
                next.emplace_back(c, v);
                best = std::max(best, v);
            }
        }
        cells.swap(next);
        w *= 0.5;
    }
    // every point of the real line is within w/2 of a kept or pruned cell center
    return std::min(1.0, best + D * w);
}

double Measure::sup_interval_mass(double eps, Window w) const {
    if (!(eps > 0.0) || !finite(eps)) fail(ErrorKind::invalid_argument, "sup_interval_mass: eps must be > 0");
    check_normalized();
    if (has_atoms()) return atomic_sup(eps, w);
    if (kind_ == Kind::uniform) return std::min(1.0, eps / (hi_ - lo_));
    if (kind_ == Kind::polynomial) return poly_sup(eps);
    if (kind_ == Kind::log_pushforward && base_->kind_ == Kind::uniform) {
        // density e^v / (b-a) increases, so the right-most window is maximal
        if (eps >= hi_ - lo_) return 1.0;
        return (std::exp(hi_) - std::exp(hi_ - eps)) / (base_->hi_ - base_->lo_);
    }
    if (breakpoint_exact()) return piecewise_linear_sup(eps);
    return certified_grid_sup(eps);
}

double Measure::grid_window_sup(double eps, double h, double offset, Window w) const {
    if (!(eps > 0.0) || !(h > 0.0)) fail(ErrorKind::invalid_argument, "grid_window_sup: eps and h must be > 0");
    check_normalized();
    long k0 = static_cast<long>(std::floor((lo_ - eps - offset) / h)) - 1;
    long k1 = static_cast<long>(std::ceil((hi_ - offset) / h)) + 1;
    double best = 0.0;
    for (long k = k0; k <= k1; ++k) {
        double e = offset + static_cast<double>(k) * h;
        best = std::max(best, mass(e, e + eps, w));
    }
    return best;
}

// ---------------------------------------------------------------------------

DisorderModel DisorderModel::product(std::vector<Measure> per_site, std::vector<int> active, double q_lo,
                                     double q_hi) {
    if (per_site.empty()) fail(ErrorKind::invalid_argument, "product: no sites");
    if (!(q_lo <= q_hi)) fail(ErrorKind::invalid_argument, "product: need q_lo <= q_hi");
    for (const auto& m : per_site) {
        if (m.lo() < q_lo - 1e-12 || m.hi() > q_hi + 1e-12)
            fail(ErrorKind::invalid_argument, "product: site law leaves the coupling box");
    }
    DisorderModel d;
    d.n_ = static_cast<int>(per_site.size());
    d.sites_ = std::move(per_site);
    d.q_lo_ = d.base_lo_ = q_lo;
    d.q_hi_ = d.base_hi_ = q_hi;
    return d.with_active(std::move(active));
}

DisorderModel DisorderModel::iid(const Measure& mu, int n_sites) {
    if (n_sites < 1) fail(ErrorKind::invalid_argument, "iid: need at least one site");
    std::vector<int> all(static_cast<std::size_t>(n_sites));
    std::iota(all.begin(), all.end(), 0);
    return product(std::vector<Measure>(static_cast<std::size_t>(n_sites), mu), all, mu.lo(), mu.hi());
}

Eigen::MatrixXd DisorderModel::cosine_kernel(double rho) {
    if (!(std::abs(rho) < 1.0)) fail(ErrorKind::invalid_argument, "cosine_kernel: need |rho| < 1");
    Eigen::MatrixXd t(kMarkovBins, kMarkovBins);
    const double pi = std::acos(-1.0);
    for (int i = 0; i < kMarkovBins; ++i)
        for (int j = 0; j < kMarkovBins; ++j) t(i, j) = 1.0 + rho * std::cos(2.0 * pi * (i - j) / kMarkovBins);
    return t;
}

DisorderModel DisorderModel::markov(int n_sites, const Eigen::MatrixXd& table, double q_lo, double q_hi,
                                    std::vector<int> active) {
    if (n_sites < 1) fail(ErrorKind::invalid_argument, "markov: need at least one site");
    if (!(q_lo < q_hi)) fail(ErrorKind::invalid_argument, "markov: need q_lo < q_hi");
    if (table.rows() != kMarkovBins || table.cols() != kMarkovBins)
        fail(ErrorKind::invalid_argument, "markov: transition table must be 64 x 64");
    if ((table.array() < 0.0).any() || !table.allFinite())
        fail(ErrorKind::invariant_violation, "markov: transition density must be finite and non-negative");
    for (int i = 0; i < kMarkovBins; ++i) {
        if (std::abs(table.row(i).sum() / kMarkovBins - 1.0) > kNormTol)
            fail(ErrorKind::invariant_violation, "markov: transition density row does not integrate to 1");
    }
    DisorderModel d;
    d.markov_ = true;
    d.n_ = n_sites;
    d.q_lo_ = d.base_lo_ = q_lo;
    d.q_hi_ = d.base_hi_ = q_hi;
    d.table_ = table;
    // stationary bin probabilities: pi P = pi with P = table / bins, sum pi = 1
    Eigen::MatrixXd a = (table / kMarkovBins).transpose() - Eigen::MatrixXd::Identity(kMarkovBins, kMarkovBins);
    a.row(kMarkovBins - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(kMarkovBins);
    rhs[kMarkovBins - 1] = 1.0;
    d.stationary_ = a.partialPivLu().solve(rhs);
    d.stationary_ = d.stationary_.cwiseMax(0.0);
    d.stationary_ /= d.stationary_.sum();
    d.stationary_law_.push_back(d.bin_histogram(d.stationary_));
    for (int i = 0; i < kMarkovBins; ++i) d.row_laws_.push_back(d.bin_histogram(table.row(i).transpose()));
    if (active.empty()) {
        active.resize(static_cast<std::size_t>(n_sites));
        std::iota(active.begin(), active.end(), 0);
    }
    return d.with_active(std::move(active));
}

DisorderModel DisorderModel::with_active(std::vector<int> active) const {
    std::sort(active.begin(), active.end());
    if (std::adjacent_find(active.begin(), active.end()) != active.end())
        fail(ErrorKind::invalid_argument, "active set has repeated indices");
    for (int a : active)
        if (a < 0 || a >= n_) fail(ErrorKind::invalid_argument, "active index out of range");
    DisorderModel d = *this;
    d.active_ = std::move(active);
    return d;
}

int DisorderModel::bin_of(double x) const {
    double w = (base_hi_ - base_lo_) / kMarkovBins;
    int b = static_cast<int>(std::floor((x - base_lo_) / w));
    return std::clamp(b, 0, kMarkovBins - 1);
}

Measure DisorderModel::bin_histogram(const Eigen::VectorXd& weights) const {
    std::vector<double> edges(kMarkovBins + 1), masses(kMarkovBins);
    double total = weights.sum();
    if (!(total > 0.0)) fail(ErrorKind::invariant_violation, "markov: conditional law has zero mass");
    for (int j = 0; j <= kMarkovBins; ++j)
        edges[static_cast<std::size_t>(j)] = base_lo_ + (base_hi_ - base_lo_) * j / kMarkovBins;
    edges.back() = base_hi_;
    for (int j = 0; j < kMarkovBins; ++j) masses[static_cast<std::size_t>(j)] = weights[j] / total;
    return Measure::histogram(std::move(edges), std::move(masses));
}

std::vector<double> DisorderModel::sample(std::uint64_t seed) const {
    Rng rng(seed);
    return sample(rng);
}

std::vector<double> DisorderModel::sample(Rng& rng) const {
    std::vector<double> w(static_cast<std::size_t>(n_));
    if (!markov_) {
        for (int i = 0; i < n_; ++i) w[static_cast<std::size_t>(i)] = sites_[static_cast<std::size_t>(i)].sample(rng);
        return w;
    }
    double x = stationary_law_.front().sample(rng);
    w[0] = x;
    for (int i = 1; i < n_; ++i) {
        x = row_laws_[static_cast<std::size_t>(bin_of(x))].sample(rng);
        w[static_cast<std::size_t>(i)] = x;
    }
    if (push_q_) {
        for (double& v : w) v = std::log(*push_q_ - v);
    }
    return w;
}

Measure DisorderModel::conditional(int alpha, const std::vector<double>& omega) const {
    if (alpha < 0 || alpha >= n_) fail(ErrorKind::invalid_argument, "conditional: index out of range");
    if (!markov_) return sites_[static_cast<std::size_t>(alpha)];
    if (static_cast<int>(omega.size()) != n_) fail(ErrorKind::invalid_argument, "conditional: configuration size");
    auto base_value = [&](int i) {
        double v = omega[static_cast<std::size_t>(i)];
        return push_q_ ? *push_q_ - std::exp(v) : v;
    };
    Eigen::VectorXd wts = Eigen::VectorXd::Ones(kMarkovBins);
    if (alpha == 0) {
        wts = stationary_;
    } else {
        wts = table_.row(bin_of(base_value(alpha - 1))).transpose();
    }
    if (alpha + 1 < n_) wts = wts.cwiseProduct(table_.col(bin_of(base_value(alpha + 1))));
    Measure m = bin_histogram(wts);
    return push_q_ ? m.log_pushforward(*push_q_) : m;
}

Measure DisorderModel::marginal(int alpha) const {
    if (alpha < 0 || alpha >= n_) fail(ErrorKind::invalid_argument, "marginal: index out of range");
    if (!markov_) return sites_[static_cast<std::size_t>(alpha)];
    return push_q_ ? stationary_law_.front().log_pushforward(*push_q_) : stationary_law_.front();
}

SFValue DisorderModel::s_F(double eps, int mc_samples, std::uint64_t seed) const {
    if (active_.empty()) fail(ErrorKind::invalid_argument, "s_F: empty active set");
    if (!(eps > 0.0)) fail(ErrorKind::invalid_argument, "s_F: eps must be > 0");
    SFValue out;
    if (!markov_) {
        for (std::size_t k = 0; k < active_.size(); ++k) {
            double v = sites_[static_cast<std::size_t>(active_[k])].sup_interval_mass(eps);
            if (v > out.value || out.argmax < 0) {
                out.value = v;
                out.argmax = static_cast<int>(k);
            }
        }
        return out;
    }
    if (mc_samples < 2) fail(ErrorKind::invalid_argument, "s_F: need at least 2 Monte Carlo samples");
    // the conditional law only sees the bins of the two neighbours, so cache by (position type, bins)
    std::map<std::tuple<int, int, int>, double> cache;
    std::vector<double> sum(active_.size(), 0.0), sum2(active_.size(), 0.0);
    Rng rng(derive_seed(seed, 0x5f));
    for (int s = 0; s < mc_samples; ++s) {
        auto w = sample(rng);
        auto base_value = [&](int i) {
            double v = w[static_cast<std::size_t>(i)];
            return push_q_ ? *push_q_ - std::exp(v) : v;
        };
        for (std::size_t k = 0; k < active_.size(); ++k) {
            int a = active_[k];
            int type = (a == 0 ? 1 : 0) + (a + 1 == n_ ? 2 : 0);
            int bp = a > 0 ? bin_of(base_value(a - 1)) : -1;
            int bn = a + 1 < n_ ? bin_of(base_value(a + 1)) : -1;
            auto key = std::make_tuple(type, bp, bn);
            auto it = cache.find(key);
            double v;
            if (it == cache.end()) {
                v = conditional(a, w).sup_interval_mass(eps);
                cache.emplace(key, v);
            } else {
                v = it->second;
            }
            sum[k] += v;
            sum2[k] += v * v;
        }
    }
    const double n = static_cast<double>(mc_samples);
    out.monte_carlo = true;
    for (std::size_t k = 0; k < active_.size(); ++k) {
        double mean = sum[k] / n;
        if (mean > out.value || out.argmax < 0) {
            double var = std::max(0.0, (sum2[k] - n * mean * mean) / (n - 1.0));
            out.value = mean;
            out.se = std::sqrt(var / n);
            out.argmax = static_cast<int>(k);
        }
    }
    return out;
}

DisorderModel DisorderModel::log_pushforward(double q) const {
    if (!finite(q) || !(q > q_hi_)) fail(ErrorKind::invalid_argument, "log_pushforward: need q > q_hi");
    DisorderModel d = *this;
    d.q_lo_ = std::log(q - q_hi_);
    d.q_hi_ = std::log(q - q_lo_);
    if (!markov_) {
        for (auto& m : d.sites_) m = m.log_pushforward(q);
        return d;
    }
    if (push_q_) fail(ErrorKind::invalid_argument, "log_pushforward: model is already transformed");
    d.push_q_ = q;
    return d;
}

bool DisorderModel::has_atoms() const {
    if (markov_) return false;
    return std::any_of(sites_.begin(), sites_.end(), [](const Measure& m) { return m.has_atoms(); });
}

}  // namespace wegnerlab
