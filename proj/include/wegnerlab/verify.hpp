#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wegnerlab/graphs.hpp"
#include "wegnerlab/lattice.hpp"
#include "wegnerlab/measures.hpp"
#include "wegnerlab/spectral.hpp"

namespace wegnerlab {

// ---- right-hand sides ----

// 6 gamma^-2 C_U^2 C_fin^2 |J_eff| s_F
double rhs_thm1(double gamma, double c_u, double c_fin, double j_eff, double sf);
// C_W = 6 n^4 gamma^-2 C_u^2 (2R+1)^(2d)
double lattice_cw(int n, double gamma, double c_u, int radius, int d);
double rhs_thm31(int n, double gamma, double c_u, int radius, int d, double j_eff, double sf);
// 2 K |I_F| s_F
double rhs_thm2(double k, double i_f, double sf);
// (q - q_-)((1 + |I|/|E_2|)^(1/|zeta|) - 1)
double thm3_eps(double q, double q_lo, double e2, double length, double zeta);

struct Thm3Rhs {
    double rhs = 0.0;
    double eps = 0.0;
    SFValue sf;
};
Thm3Rhs rhs_thm3(double k, double i_f, double q, double e2, double length, double zeta, const DisorderModel& p,
                 std::uint64_t seed = 0);

// ---- hypothesis checkers ----

enum class C5Variant { a, b, c, d, failed };
const char* to_string(C5Variant v);

struct C5Result {
    C5Variant variant = C5Variant::failed;
    double gamma = 0.0;  // largest gamma passing on every sample
    std::string counterexample;
};

// Eigenvalue form: lambda_n(omega + t 1_F) - lambda_n(omega) >= t gamma (variant a) or <= -t gamma (variant c).
using EigenFn = std::function<Vector(const std::vector<double>&)>;
C5Result check_hypothesis_C5(const EigenFn& eigenvalues, const DisorderModel& p, int samples,
                             const std::vector<double>& t_grid, std::uint64_t seed);
// Derivative form: each matrix is sum_alpha d f / d omega_alpha at one sample; lambda_min >= gamma (b)
// or lambda_max <= -gamma (d).
C5Result check_hypothesis_C5_derivative(const std::vector<Matrix>& derivative_sums);
// Edge-length M-matrix on J: sum_e dM/dl_e at sampled lengths and energies in J.
C5Result check_hypothesis_C5_graph(const MetricGraphModel& g, const DisorderModel& lengths, Interval J, int samples,
                                   int energies, std::uint64_t seed);

// f_u(omega) = a(u) - sum_alpha (q - omega_alpha)^zeta b_alpha(u)
struct LppvModel {
    int dim = 0;
    double q = 0.0;
    double zeta = 1.0;
    std::function<double(const Vector&, const std::vector<double>&)> f;
    std::function<double(const Vector&)> a;
    std::function<double(const Vector&, int)> b;
    int n_alpha = 0;
    Matrix a_operator;  // optional: spot-check lambda_min(a) >= -1e-9 when non-empty
};
// Matrix model H(omega) = base + sum omega_alpha diag(parts_alpha), shifted by e_q times gram (identity when empty).
LppvModel lppv_from_matrices(const Matrix& base, const std::vector<Vector>& parts, double q, double e_q,
                             const Matrix& gram = Matrix());

struct LppvResult {
    bool pass = true;
    double max_residual = 0.0;  // relative
    double min_a = 0.0;
    double min_b = 0.0;
    double lambda_min_a = 0.0;
    std::string message;
};
LppvResult check_lppv_form(const LppvModel& m, const DisorderModel& p, int samples, std::uint64_t seed);

struct StollmannResult {
    long hits = 0;
    long n = 0;
    double estimate = 0.0;
    double lower = 0.0;  // Wilson 95%
    double upper = 0.0;
    double bound = 0.0;  // |I_F| s_F(P, eta)
    bool pass = false;
};
using PhiFn = std::function<double(const std::vector<double>&)>;
StollmannResult stollmann_check(const PhiFn& phi, const DisorderModel& p, double c, double eta, long n,
                                std::uint64_t seed);
std::pair<double, double> wilson_interval(long hits, long n, double z = 1.959963984540054);

// ---- experiments ----

enum class ScenarioKind { lattice, graph_length, graph_coupling };
enum class TheoremKind { thm_2_2, thm_2_3, thm_2_4, thm_3_1, thm_3_4_chain };
const char* to_string(ScenarioKind s);
const char* to_string(TheoremKind t);
ScenarioKind scenario_from_string(const std::string& s);
TheoremKind theorem_from_string(const std::string& s);

struct DisorderSpec {
    std::string kind = "uniform";  // uniform | atomic | cantor | polynomial | markov
    double lo = 0.0;
    double hi = 1.0;
    std::vector<double> points;
    std::vector<double> weights;
    int level = 8;
    std::vector<double> coeffs;
    double rho = 0.15;  // markov: cosine kernel strength
    int mc_samples = 4096;

    Measure measure() const;  // single-site law; not for markov
    DisorderModel model(int sites) const;
};

struct GraphSpec {
    int d = 2;
    int side = 3;
    double l_min = 0.9;
    double l_max = 1.1;
    double length = 1.0;  // fixed edge length for coupling scenarios
    double alpha = 0.0;   // fixed vertex coupling for length scenarios
    bool dirichlet_boundary = false;
};

struct ExperimentConfig {
    std::string name = "experiment";
    ScenarioKind scenario = ScenarioKind::lattice;
    TheoremKind theorem = TheoremKind::thm_3_1;
    LatticeModel lattice;
    std::vector<Site> centers{{0, 0}};
    int half_side = 5;
    GraphSpec graph;
    Interval interval{0.0, 1.0};
    DisorderSpec disorder;
    long samples = 2000;
    std::uint64_t seed = 0;
    Boundary boundary = Boundary::simple;
    std::optional<double> q;
    double zeta = 1.0;
    std::optional<double> gamma;  // declared uncertainty constant
    double rhs_scale = 1.0;       // testing override, never set by shipped configs

    void validate() const;  // precondition_violated / invalid_argument
};

enum class Verdict { verified, violated, inconclusive, hypothesis_failed };
const char* to_string(Verdict v);

struct Ingredient {
    std::string name;
    double value = 0.0;
    std::string source;  // declared | computed | measured | monte-carlo
};

struct BoundReport {
    std::string scenario;
    std::string theorem;
    double interval_lo = 0.0;
    double interval_hi = 0.0;
    double interval_length = 0.0;
    double mean = 0.0;
    double se = 0.0;
    double rhs = 0.0;
    double margin = 0.0;  // rhs - (mean + 3 se)
    double trivial_bound = 0.0;
    bool vacuous = false;
    Verdict verdict = Verdict::inconclusive;
    double s_f = 0.0;
    double s_f_se = 0.0;
    double s_f_eps = 0.0;
    double gamma = 0.0;
    double k_or_dim = 0.0;
    double i_f = 0.0;
    double j_eff = 0.0;
    double c_fin = 0.0;
    double c_u = 0.0;
    double hit_frequency = 0.0;  // fraction of realizations with spectrum in the interval
    long samples = 0;
    long checks = 0;          // per-realization assertions evaluated
    long check_failures = 0;
    std::uint64_t seed = 0;
    std::string digest;
    std::string note;
    std::vector<Ingredient> ingredients;
};

// Worker count: explicit value if > 0, else WEGNERLAB_THREADS, else hardware concurrency.
int resolve_threads(int requested);

BoundReport run_experiment(const ExperimentConfig& cfg, int threads = 0);

// Deterministic bound checked realization by realization on a lattice config, with gamma = gamma_emp(omega).
struct Prop21Stats {
    long realizations = 0;
    long checked = 0;  // realizations with nonempty range and gamma_emp > 0
    long failures = 0;
    double worst_ratio = 0.0;  // max lhs / rhs
};
Prop21Stats prop21_sweep(const ExperimentConfig& cfg, long realizations, std::uint64_t seed);

}  // namespace wegnerlab
