#include "rib/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace rib::eval {

namespace {
constexpr double kPi = 3.141592653589793238462643383279;
constexpr double kLn2 = 0.6931471805599453094172321214582;

double normal_log_pdf(double x) { return -0.5 * x * x - 0.5 * std::log(2.0 * kPi); }

double upper_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }
}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double auc_roc(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores) {
    if (pos_scores.empty() || neg_scores.empty()) {
        throw std::invalid_argument("auc_roc: empty score set");
    }
    std::vector<double> neg = neg_scores;
    std::sort(neg.begin(), neg.end());
    // 2*wins + ties, in integers, so the sorted path agrees with the
    // pairwise definition bit for bit.
    unsigned long long total2 = 0;
    for (double p : pos_scores) {
        const auto lo = std::lower_bound(neg.begin(), neg.end(), p);
        const auto hi = std::upper_bound(neg.begin(), neg.end(), p);
        total2 += 2ull * static_cast<unsigned long long>(lo - neg.begin()) +
                  static_cast<unsigned long long>(hi - lo);
    }
    return static_cast<double>(total2) /
           (2.0 * static_cast<double>(pos_scores.size()) * static_cast<double>(neg.size()));
}

double recognizability(const std::vector<double>& pos_scores,
                       const std::vector<double>& neg_scores) {
    const double auc = auc_roc(pos_scores, neg_scores);
    return 2.0 * std::max(auc, 1.0 - auc) - 1.0;
}

RocCurve roc_curve(const std::vector<double>& pos_scores, const std::vector<double>& neg_scores) {
    if (pos_scores.empty() || neg_scores.empty()) {
        throw std::invalid_argument("roc_curve: empty score set");
    }
    struct Entry {
        double score;
        bool positive;
    };
    std::vector<Entry> entries;
    entries.reserve(pos_scores.size() + neg_scores.size());
    for (double s : pos_scores) entries.push_back({s, true});
    for (double s : neg_scores) entries.push_back({s, false});
    std::sort(entries.begin(), entries.end(),
              [](const Entry& a, const Entry& b) { return a.score > b.score; });

    const double np = static_cast<double>(pos_scores.size());
    const double nn = static_cast<double>(neg_scores.size());
    RocCurve curve;
    curve.fpr.push_back(0.0);
    curve.tpr.push_back(0.0);
    curve.thresholds.push_back(std::numeric_limits<double>::infinity());
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < entries.size()) {
        const double s = entries[i].score;
        while (i < entries.size() && entries[i].score == s) {
            if (entries[i].positive) {
                ++tp;
            } else {
                ++fp;
            }
            ++i;
        }
        curve.fpr.push_back(static_cast<double>(fp) / nn);
        curve.tpr.push_back(static_cast<double>(tp) / np);
        curve.thresholds.push_back(s);
    }
    return curve;
}

double trapezoid_area(const RocCurve& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        area += (curve.fpr[i] - curve.fpr[i - 1]) * (curve.tpr[i] + curve.tpr[i - 1]) / 2.0;
    }
    return area;
}

Polygon achievable_region(const RocCurve& curve) {
    Polygon poly;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        poly.x.push_back(curve.fpr[i]);
        poly.y.push_back(curve.tpr[i]);
    }
    // central reflection through (1/2, 1/2); traversing the reflected curve
    // forward walks back from (1,1) to (0,0), closing the polygon
    for (std::size_t i = 0; i < curve.size(); ++i) {
        poly.x.push_back(1.0 - curve.fpr[i]);
        poly.y.push_back(1.0 - curve.tpr[i]);
    }
    return poly;
}

double polygon_area(const Polygon& poly) {
    const std::size_t n = poly.x.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = (i + 1) % n;
        acc += poly.x[i] * poly.y[j] - poly.x[j] * poly.y[i];
    }
    return std::abs(acc) / 2.0;
}

double plugin_mi(const std::vector<int>& symbols, const std::vector<std::uint8_t>& u_bits) {
    if (symbols.empty() || symbols.size() != u_bits.size()) {
        throw std::invalid_argument("plugin_mi: empty input or length mismatch");
    }
    const double n = static_cast<double>(symbols.size());
    std::map<int, std::array<double, 2>> joint;
    double u_count[2] = {0.0, 0.0};
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        const int u = u_bits[i] ? 1 : 0;
        auto& cell = joint[symbols[i]];
        cell[static_cast<std::size_t>(u)] += 1.0;
        u_count[u] += 1.0;
    }
    double mi = 0.0;
    for (const auto& [sym, cell] : joint) {
        const double p_sym = (cell[0] + cell[1]) / n;
        for (int u = 0; u < 2; ++u) {
            const double c = cell[static_cast<std::size_t>(u)];
            if (c == 0.0 || u_count[u] == 0.0) continue;
            const double p_joint = c / n;
            const double p_u = u_count[u] / n;
            mi += p_joint * std::log(p_joint / (p_sym * p_u));
        }
    }
    return std::max(mi, 0.0);
}

std::vector<Theorem1Row> theorem1_gaussian_check(const std::vector<double>& mu_grid) {
    std::vector<Theorem1Row> rows;
    rows.reserve(mu_grid.size());
    for (double mu : mu_grid) {
        Theorem1Row row;
        row.mu = mu;
        row.recognizability_analytic = 2.0 * normal_cdf(mu / std::sqrt(2.0)) - 1.0;
        row.kl = mu * mu / 2.0;
        row.bound = row.kl + 1.0 - kLn2;
        row.pass = row.recognizability_analytic <= row.bound;
        rows.push_back(row);
    }
    return rows;
}

Lemma1Result lemma1_numeric(double mu, std::size_t grid_size) {
    if (!(mu > 0.0)) throw std::invalid_argument("lemma1_numeric: mu must be positive");
    if (grid_size < 1000) throw std::invalid_argument("lemma1_numeric: grid too coarse");
    // -int_0^1 ln psi'(x) dx with x = Qbar(t): the threshold t is standard
    // normal under H0, and ln psi'(x(t)) = ln phi(t - mu) - ln phi(t).
    std::size_t intervals = grid_size;
    if (intervals % 2 == 1) ++intervals;
    const double lo = -10.0;
    const double hi = 10.0;
    const double h = (hi - lo) / static_cast<double>(intervals);
    auto integrand = [&](double t) {
        const double log_psi_prime = normal_log_pdf(t - mu) - normal_log_pdf(t);
        return -log_psi_prime * std::exp(normal_log_pdf(t));
    };
    double acc = integrand(lo) + integrand(hi);
    for (std::size_t i = 1; i < intervals; ++i) {
        const double t = lo + h * static_cast<double>(i);
        acc += (i % 2 == 1 ? 4.0 : 2.0) * integrand(t);
    }
    Lemma1Result res;
    res.integral = acc * h / 3.0;
    res.analytic = mu * mu / 2.0;
    res.abs_err = std::abs(res.integral - res.analytic);
    return res;
}

RocConditions roc_conditions_check(const RocCurve& curve) {
    RocConditions out;
    out.c1_err = std::abs((curve.tpr.back() - curve.tpr.front()) - 1.0);
    out.c2_ok = true;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        if (curve.fpr[i] < curve.fpr[i - 1] || curve.tpr[i] < curve.tpr[i - 1]) {
            out.c2_ok = false;
            break;
        }
    }
    // Upper concave hull over (fpr, tpr), then verify its slopes are
    // non-increasing. Empirical curves are checked on the hull.
    std::vector<std::pair<double, double>> hull;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const std::pair<double, double> p{curve.fpr[i], curve.tpr[i]};
        while (hull.size() >= 2) {
            const auto& a = hull[hull.size() - 2];
            const auto& b = hull[hull.size() - 1];
            const double cross = (b.first - a.first) * (p.second - a.second) -
                                 (b.second - a.second) * (p.first - a.first);
            if (cross >= 0.0) {
                hull.pop_back();
            } else {
                break;
            }
        }
        hull.push_back(p);
    }
    out.c3_ok = true;
    for (std::size_t i = 2; i < hull.size(); ++i) {
        const double dx1 = hull[i - 1].first - hull[i - 2].first;
        const double dy1 = hull[i - 1].second - hull[i - 2].second;
        const double dx2 = hull[i].first - hull[i - 1].first;
        const double dy2 = hull[i].second - hull[i - 1].second;
        // slope comparison without division: dy1/dx1 >= dy2/dx2
        if (dy1 * dx2 - dy2 * dx1 < -1e-9) {
            out.c3_ok = false;
            break;
        }
    }
    return out;
}

RocCurve gaussian_roc(double mu, std::size_t points) {
    if (points < 2) throw std::invalid_argument("gaussian_roc: need at least 2 points");
    RocCurve curve;
    curve.fpr.push_back(0.0);
    curve.tpr.push_back(0.0);
    curve.thresholds.push_back(std::numeric_limits<double>::infinity());
    const double hi = 8.0 + std::max(mu, 0.0);
    const double lo = -8.0;
    for (std::size_t i = 0; i < points; ++i) {
        // thresholds descending so fpr ascends
        const double tau =
            hi - (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
        curve.fpr.push_back(upper_tail(tau));
        curve.tpr.push_back(upper_tail(tau - mu));
        curve.thresholds.push_back(tau);
    }
    curve.fpr.push_back(1.0);
    curve.tpr.push_back(1.0);
    curve.thresholds.push_back(-std::numeric_limits<double>::infinity());
    return curve;
}

namespace {
std::vector<double> midranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}
}  // namespace

std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("spearman: length mismatch");
    if (a.size() < 2) return std::nullopt;
    const std::vector<double> ra = midranks(a);
    const std::vector<double> rb = midranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) return std::nullopt;  // all ties
    return cov / std::sqrt(va * vb);
}

}  // namespace rib::eval
