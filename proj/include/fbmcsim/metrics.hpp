#pragma once

#include <complex>
#include <vector>

namespace fbmcsim {

constexpr double kSinrCapDb = 100.0;

// Pooled moments for the regression-gain SINR estimator. The gain
// a = sum(shat s)/sum(s^2) absorbs any common scaling, and
// SINR = a^2 sum(s^2) / (sum(shat^2) - a^2 sum(s^2)).
struct SinrAccumulator {
    double cross = 0.0;   // sum shat*s
    double ref = 0.0;     // sum s^2
    double est = 0.0;     // sum shat^2
    long long count = 0;

    void add(double shat, double s) {
        cross += shat * s;
        ref += s * s;
        est += shat * shat;
        ++count;
    }
    void merge(const SinrAccumulator& other) {
        cross += other.cross;
        ref += other.ref;
        est += other.est;
        count += other.count;
    }
    double sinr_db() const;
};

// One-shot version over paired samples.
double measure_sinr_db(const std::vector<double>& estimates, const std::vector<double>& reference);

struct BerCounter {
    long long bit_errors = 0;
    long long bits = 0;

    void merge(const BerCounter& other) {
        bit_errors += other.bit_errors;
        bits += other.bits;
    }
    double ber() const { return bits > 0 ? static_cast<double>(bit_errors) / bits : 0.0; }
};

double nmse(const std::vector<std::complex<double>>& estimate,
            const std::vector<std::complex<double>>& truth);

// Sorted samples -> P(X <= x) evaluated at the query points.
std::vector<double> empirical_cdf(std::vector<double> samples, const std::vector<double>& at);

// Interquartile range of a sample (linear-interpolation quantiles).
double interquartile_range(std::vector<double> samples);

double quantile(std::vector<double> samples, double p);

// Two-sample Kolmogorov-Smirnov statistic sup_x |F1(x) - F2(x)|.
double ks_statistic(std::vector<double> a, std::vector<double> b);

}  // namespace fbmcsim
