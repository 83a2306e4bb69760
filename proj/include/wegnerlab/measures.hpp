#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wegnerlab/rng.hpp"

namespace wegnerlab {

// Which endpoints of a window of length eps are included.
enum class Window { open, left_closed, right_closed, closed };

// A compactly supported probability law on the real line.
class Measure {
public:
    enum class Kind { uniform, atomic, cantor, polynomial, empirical, histogram, log_pushforward };

    static Measure uniform(double a, double b);
    static Measure atomic(std::vector<double> points, std::vector<double> weights);
    // Uniform law on the 2^m closed triadic intervals of the level-m Cantor construction.
    static Measure cantor(int level);
    // Density p(t)/(b-a) with t=(x-a)/(b-a) and p(t) = sum_k coeffs[k] t^k.
    static Measure polynomial(double a, double b, std::vector<double> coeffs);
    static Measure empirical(std::vector<double> sample);
    // Piecewise-constant density; masses[i] sits uniformly on [edges[i], edges[i+1]].
    static Measure histogram(std::vector<double> edges, std::vector<double> masses);

    // Law of ln(q - X) for X ~ *this. Requires q > hi().
    Measure log_pushforward(double q) const;

    Kind kind() const { return kind_; }
    std::string kind_name() const;
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    bool has_atoms() const { return kind_ == Kind::atomic || kind_ == Kind::empirical; }

    double cdf(double x) const;       // mu((-inf, x])
    double cdf_left(double x) const;  // mu((-inf, x))
    double mass(double a, double b, Window w = Window::open) const;
    double pdf(double x) const;
    double density_bound() const;
    double quantile(double u) const;
    double sample(Rng& rng) const { return quantile(uniform01(rng)); }

    // sup_E mu(E, E+eps) for the chosen window type.
    double sup_interval_mass(double eps, Window w = Window::open) const;
    // Plain sliding-window maximum over E = offset + k h, no certification term.
    double grid_window_sup(double eps, double h, double offset, Window w = Window::open) const;
    // Points where the density may jump or lose smoothness (support ends included).
    std::vector<double> smooth_breaks() const;

    const std::vector<double>& points() const { return points_; }
    const std::vector<double>& weights() const { return weights_; }
    const std::vector<double>& coeffs() const { return coeffs_; }
    int level() const { return level_; }
    double push_q() const { return push_q_; }
    const Measure* base() const { return base_.get(); }

private:
    Measure() = default;
    void check_normalized() const;
    double poly_cdf_t(double t) const;
    double certified_grid_sup(double eps) const;
    double piecewise_linear_sup(double eps) const;
    double atomic_sup(double eps, Window w) const;
    double poly_sup(double eps) const;
    bool breakpoint_exact() const;

    Kind kind_ = Kind::uniform;
    double lo_ = 0.0, hi_ = 1.0;
    // atomic/empirical: sorted points and weights; histogram/cantor: edges and bin masses
    std::vector<double> points_;
    std::vector<double> weights_;
    std::vector<double> coeffs_;
    std::vector<double> cum_;
    int level_ = 0;
    double total_ = 1.0;  // checked against 1 before use
    double push_q_ = 0.0;
    std::shared_ptr<const Measure> base_;
};

// Transition density tables for the Markov chain family live on this many bins.
inline constexpr int kMarkovBins = 64;

struct SFValue {
    double value = 0.0;
    double se = 0.0;  // Monte Carlo standard error, 0 when exact
    bool monte_carlo = false;
    int argmax = -1;  // index in the active set attaining the max
};

// Law P of the coupling vector omega = (omega_0, ..., omega_{n-1}).
class DisorderModel {
public:
    static DisorderModel product(std::vector<Measure> per_site, std::vector<int> active, double q_lo,
                                 double q_hi);
    static DisorderModel iid(const Measure& mu, int n_sites);
    // table(i, j) is the density of the next value at a point of bin j given the current one in bin i,
    // in units of 1/(q_hi - q_lo) per unit length.
    static DisorderModel markov(int n_sites, const Eigen::MatrixXd& table, double q_lo, double q_hi,
                                std::vector<int> active = {});
    // Doubly stochastic kernel 1 + rho cos(2 pi (i - j) / bins); its stationary law is uniform.
    static Eigen::MatrixXd cosine_kernel(double rho);

    int size() const { return n_; }
    const std::vector<int>& active() const { return active_; }
    double q_lo() const { return q_lo_; }
    double q_hi() const { return q_hi_; }
    bool is_product() const { return !markov_; }
    const Measure& site_measure(int alpha) const { return sites_.at(alpha); }
    const Eigen::MatrixXd& table() const { return table_; }
    const Eigen::VectorXd& stationary() const { return stationary_; }
    std::optional<double> push() const { return push_q_; }

    std::vector<double> sample(std::uint64_t seed) const;
    std::vector<double> sample(Rng& rng) const;
    // Conditional law of omega_alpha given all other coordinates.
    Measure conditional(int alpha, const std::vector<double>& omega) const;
    Measure marginal(int alpha) const;
    SFValue s_F(double eps, int mc_samples = 4096, std::uint64_t seed = 0) const;
    DisorderModel log_pushforward(double q) const;
    // Same law with a different active set.
    DisorderModel with_active(std::vector<int> active) const;
    bool has_atoms() const;

private:
    DisorderModel() = default;
    int bin_of(double x) const;
    Measure bin_histogram(const Eigen::VectorXd& weights) const;

    int n_ = 0;
    std::vector<int> active_;
    double q_lo_ = 0.0, q_hi_ = 1.0;
    bool markov_ = false;
    std::vector<Measure> sites_;
    double base_lo_ = 0.0, base_hi_ = 1.0;  // untransformed box, used for binning
    Eigen::MatrixXd table_;
    std::vector<Measure> row_laws_;
    std::vector<Measure> stationary_law_;
    Eigen::VectorXd stationary_;  // bin probabilities
    std::optional<double> push_q_;
};

}  // namespace wegnerlab
