#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace rib::eval {

// Mann-Whitney AUC with half-credit ties. Sorted implementation, exactly
// equal to the O(m*k) pairwise definition (win/tie totals are counted in
// integers before the single division).
double auc_roc(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores);

// 2 * max(AUC, 1-AUC) - 1. A below-chance test's mirror is achievable, so
// the value is symmetrized into [0, 1].
double recognizability(const std::vector<double>& pos_scores,
                       const std::vector<double>& neg_scores);

struct RocCurve {
    std::vector<double> fpr;         // non-decreasing, starts 0, ends 1
    std::vector<double> tpr;         // non-decreasing, starts 0, ends 1
    std::vector<double> thresholds;  // +inf for the (0,0) point

    std::size_t size() const { return fpr.size(); }
};

// Empirical curve over all distinct thresholds; trapezoidal area matches
// auc_roc to 1e-12.
RocCurve roc_curve(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores);

double trapezoid_area(const RocCurve& curve);

// Curve points united with their reflection through (1/2, 1/2), ordered as
// a closed polygon. Shoelace area = 2*(AUC - 1/2) for AUC >= 1/2.
struct Polygon {
    std::vector<double> x;
    std::vector<double> y;
};

Polygon achievable_region(const RocCurve& curve);

double polygon_area(const Polygon& poly);

// Plug-in mutual information (nats) between a discrete symbol sequence and
// binary selector bits, from empirical cell frequencies.
double plugin_mi(const std::vector<int>& symbols, const std::vector<std::uint8_t>& u_bits);

struct Theorem1Row {
    double mu = 0.0;
    double recognizability_analytic = 0.0;  // 2*Phi(mu/sqrt(2)) - 1
    double kl = 0.0;                        // mu^2 / 2
    double bound = 0.0;                     // kl + 1 - ln 2
    bool pass = false;
};

// Gaussian location family check of the recognizability <= KL + log(e/2)
// inequality: P = N(0,1), Q = N(mu,1).
std::vector<Theorem1Row> theorem1_gaussian_check(const std::vector<double>& mu_grid);

struct Lemma1Result {
    double integral = 0.0;  // numeric -int_0^1 ln psi'(x) dx
    double analytic = 0.0;  // mu^2 / 2
    double abs_err = 0.0;
};

// Numeric check of the ROC/KL identity for the Gaussian LRT ROC
// psi(x) = Qbar(Qbar^{-1}(x) - mu), via the threshold parameterization.
Lemma1Result lemma1_numeric(double mu, std::size_t grid_size);

struct RocConditions {
    double c1_err = 0.0;  // |psi(1) - psi(0) - 1|
    bool c2_ok = false;   // monotone non-decreasing
    bool c3_ok = false;   // concavity of the upper convex hull
};

RocConditions roc_conditions_check(const RocCurve& curve);

// Analytic Gaussian LRT ROC sampled on `points` thresholds.
RocCurve gaussian_roc(double mu, std::size_t points);

// Spearman rank correlation; absent for fewer than two points or when
// either series is entirely tied.
std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b);

double normal_cdf(double x);

}  // namespace rib::eval
