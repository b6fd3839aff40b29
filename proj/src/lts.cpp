#include "q4s/lts.hpp"

#include "q4s/error.hpp"
#include "q4s/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace q4s {

namespace {

constexpr std::size_t kAllPairsLimit = 60;
constexpr std::size_t kSubsampleSize = 1500;
constexpr std::size_t kRandomStarts = 120;
constexpr std::size_t kKeptStarts = 10;
constexpr std::size_t kFullStarts = 2;
constexpr int kMaxSteps = 100;

struct Candidate {
    double a = 0.0;
    double b = 0.0;
    double objective = 0.0;
};

bool ols_on(std::span<const double> x, std::span<const double> y, std::span<const std::size_t> idx, double& a,
            double& b) {
    const double n = static_cast<double>(idx.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i : idx) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i : idx) {
        const double dx = x[i] - mx;
        sxx += dx * dx;
        sxy += dx * (y[i] - my);
    }
    if (!(sxx > 0.0)) return false;
    b = sxy / sxx;
    a = my - b * mx;
    return true;
}

// Concentration steps over the points listed in `pool`: keep the h smallest
// squared residuals of the current line and refit on them.
class Concentrator {
public:
    Concentrator(std::span<const double> x, std::span<const double> y, std::vector<std::size_t> pool, std::size_t h)
        : x_(x), y_(y), pool_(std::move(pool)), h_(h), r2_(pool_.size()), scratch_(pool_.size()), subset_(h) {}

    Candidate converge(double a, double b, int max_steps) {
        Candidate best{a, b, select(a, b)};
        for (int it = 0; it < max_steps; ++it) {
            double na = 0.0;
            double nb = 0.0;
            if (!ols_on(x_, y_, subset_, na, nb)) break;
            const double after = select(na, nb);
            if (!(after < best.objective)) break;
            const bool stalled = after >= best.objective * (1.0 - 1e-14);
            best = {na, nb, after};
            if (stalled) break;
        }
        return best;
    }

private:
    // Fills subset_ with the h points of smallest squared residual and
    // returns the sum of those residuals.
    double select(double a, double b) {
        for (std::size_t k = 0; k < pool_.size(); ++k) {
            const std::size_t i = pool_[k];
            const double r = y_[i] - a - b * x_[i];
            r2_[k] = r * r;
        }
        scratch_ = r2_;
        const auto nth = scratch_.begin() + static_cast<std::ptrdiff_t>(h_ - 1);
        std::nth_element(scratch_.begin(), nth, scratch_.end());
        const double cut = *nth;
        std::size_t below = 0;
        for (std::size_t k = 0; k < pool_.size(); ++k) below += r2_[k] < cut;
        std::size_t ties = h_ - below;
        std::size_t n = 0;
        double sum = 0.0;
        for (std::size_t k = 0; k < pool_.size() && n < h_; ++k) {
            if (r2_[k] < cut || (r2_[k] == cut && ties > 0)) {
                if (!(r2_[k] < cut)) --ties;
                subset_[n++] = pool_[k];
                sum += r2_[k];
            }
        }
        return sum;
    }

    std::span<const double> x_;
    std::span<const double> y_;
    std::vector<std::size_t> pool_;
    std::size_t h_;
    std::vector<double> r2_;
    std::vector<double> scratch_;
    std::vector<std::size_t> subset_;
};

bool line_through(std::span<const double> x, std::span<const double> y, std::size_t i, std::size_t j, double& a,
                  double& b) {
    const double dx = x[j] - x[i];
    if (dx == 0.0) return false;
    b = (y[j] - y[i]) / dx;
    a = y[i] - b * x[i];
    return true;
}

} // namespace

LineFit ols_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error(Errc::LengthMismatch, "ols: x and y differ in length");
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    LineFit f;
    if (x.size() < 2 || !ols_on(x, y, idx, f.intercept, f.slope)) {
        throw Error(Errc::InsufficientInliers, "ols: need at least two distinct x values");
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        f.objective += r * r;
    }
    f.coverage = x.size();
    return f;
}

std::size_t lts_coverage(std::size_t n, double trim_fraction) {
    const auto h = static_cast<std::size_t>(std::ceil((1.0 - trim_fraction) * static_cast<double>(n)));
    return std::clamp<std::size_t>(h, std::min<std::size_t>(2, n), n);
}

LineFit lts_fit(std::span<const double> x, std::span<const double> y, std::size_t h) {
    const std::size_t n = x.size();
    if (y.size() != n) throw Error(Errc::LengthMismatch, "lts: x and y differ in length");
    if (n < 2 || h < 2 || h > n) throw Error(Errc::InsufficientInliers, "lts: need 2 <= h <= n");

    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    Concentrator full(x, y, all, h);

    std::vector<Candidate> finals;
    if (n <= kAllPairsLimit) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                double a = 0.0;
                double b = 0.0;
                if (line_through(x, y, i, j, a, b)) finals.push_back(full.converge(a, b, kMaxSteps));
            }
        }
    } else {
        Rng rng(0x4c545321ull ^ n);
        std::vector<std::size_t> sub = all;
        if (n > kSubsampleSize) {
            // Partial Fisher-Yates for a seeded subsample.
            for (std::size_t k = 0; k < kSubsampleSize; ++k) {
                std::swap(sub[k], sub[k + rng.below(n - k)]);
            }
            sub.resize(kSubsampleSize);
        }
        const std::size_t m = sub.size();
        const std::size_t h_sub = std::clamp<std::size_t>(
            static_cast<std::size_t>(std::ceil(static_cast<double>(h) * static_cast<double>(m) / static_cast<double>(n))),
            2, m);
        Concentrator local(x, y, sub, h_sub);

        std::vector<Candidate> starts;
        double a = 0.0;
        double b = 0.0;
        if (ols_on(x, y, sub, a, b)) starts.push_back(local.converge(a, b, 2));
        for (std::size_t s = 0; s < kRandomStarts; ++s) {
            const std::size_t i = sub[rng.below(m)];
            const std::size_t j = sub[rng.below(m)];
            if (i != j && line_through(x, y, i, j, a, b)) starts.push_back(local.converge(a, b, 2));
        }
        std::stable_sort(starts.begin(), starts.end(),
                         [](const Candidate& p, const Candidate& q) { return p.objective < q.objective; });
        if (starts.size() > kKeptStarts) starts.resize(kKeptStarts);
        if (m == n) {
            for (const Candidate& c : starts) finals.push_back(full.converge(c.a, c.b, kMaxSteps));
        } else {
            // Converge on the subsample first; only the best few go to the full data.
            for (Candidate& c : starts) c = local.converge(c.a, c.b, kMaxSteps);
            std::stable_sort(starts.begin(), starts.end(),
                             [](const Candidate& p, const Candidate& q) { return p.objective < q.objective; });
            if (starts.size() > kFullStarts) starts.resize(kFullStarts);
            for (const Candidate& c : starts) finals.push_back(full.converge(c.a, c.b, kMaxSteps));
        }
    }
    if (finals.empty()) throw Error(Errc::InsufficientInliers, "lts: all x values coincide");

    const auto best = std::min_element(finals.begin(), finals.end(),
                                       [](const Candidate& p, const Candidate& q) { return p.objective < q.objective; });
    return {best->a, best->b, best->objective, h};
}

} // namespace q4s
