#include "fbmcsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fbmcsim {

double SinrAccumulator::sinr_db() const {
    if (count == 0 || ref <= 0.0) return -kSinrCapDb;
    const double a = cross / ref;
    const double signal = a * a * ref;
    const double noise = est - signal;
    if (signal <= 0.0) return -kSinrCapDb;
    if (noise <= signal * std::pow(10.0, -kSinrCapDb / 10.0))
        return kSinrCapDb;
    return std::min(kSinrCapDb, 10.0 * std::log10(signal / noise));
}

double measure_sinr_db(const std::vector<double>& estimates, const std::vector<double>& reference) {
    if (estimates.size() != reference.size())
        throw std::invalid_argument("measure_sinr_db: size mismatch");
    SinrAccumulator acc;
    for (std::size_t i = 0; i < estimates.size(); ++i) acc.add(estimates[i], reference[i]);
    return acc.sinr_db();
}

double nmse(const std::vector<std::complex<double>>& estimate,
            const std::vector<std::complex<double>>& truth) {
    if (estimate.size() != truth.size()) throw std::invalid_argument("nmse: size mismatch");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        num += std::norm(estimate[i] - truth[i]);
        den += std::norm(truth[i]);
    }
    if (den <= 0.0) throw std::invalid_argument("nmse: zero reference energy");
    return num / den;
}

std::vector<double> empirical_cdf(std::vector<double> samples, const std::vector<double>& at) {
    std::sort(samples.begin(), samples.end());
    std::vector<double> out;
    out.reserve(at.size());
    for (double x : at) {
        const auto it = std::upper_bound(samples.begin(), samples.end(), x);
        out.push_back(samples.empty()
                          ? 0.0
                          : static_cast<double>(it - samples.begin()) / samples.size());
    }
    return out;
}

double quantile(std::vector<double> samples, double p) {
    if (samples.empty()) throw std::invalid_argument("quantile: empty sample");
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("quantile: p out of [0,1]");
    std::sort(samples.begin(), samples.end());
    const double pos = p * (samples.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - lo;
    if (lo + 1 >= samples.size()) return samples.back();
    return samples[lo] * (1.0 - frac) + samples[lo + 1] * frac;
}

double interquartile_range(std::vector<double> samples) {
    return quantile(samples, 0.75) - quantile(samples, 0.25);
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_statistic: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t ia = 0;
    std::size_t ib = 0;
    double d = 0.0;
    while (ia < a.size() && ib < b.size()) {
        const double x = std::min(a[ia], b[ib]);
        while (ia < a.size() && a[ia] <= x) ++ia;
        while (ib < b.size() && b[ib] <= x) ++ib;
        d = std::max(d, std::abs(static_cast<double>(ia) / a.size() -
                                 static_cast<double>(ib) / b.size()));
    }
    return d;
}

}  // namespace fbmcsim
