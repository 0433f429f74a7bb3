#include "mf/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace mf {

void EmpiricalMeasure::finish() {
    if (sorted_.empty()) throw std::invalid_argument("EmpiricalMeasure: empty sample list");
    double s = 0.0, s2 = 0.0;
    for (double v : sorted_) {
        if (!std::isfinite(v)) throw std::invalid_argument("EmpiricalMeasure: non-finite sample");
        s += v;
        s2 += v * v;
    }
    const double n = static_cast<double>(sorted_.size());
    mean_ = s / n;
    second_ = s2 / n;
}

EmpiricalMeasure EmpiricalMeasure::from_samples(std::vector<double> values) {
    EmpiricalMeasure m;
    m.sorted_ = std::move(values);
    std::sort(m.sorted_.begin(), m.sorted_.end());
    m.finish();
    return m;
}

EmpiricalMeasure EmpiricalMeasure::from_sorted(std::vector<double> values) {
    if (!std::is_sorted(values.begin(), values.end()))
        throw std::invalid_argument("EmpiricalMeasure::from_sorted: values not sorted");
    EmpiricalMeasure m;
    m.sorted_ = std::move(values);
    m.finish();
    return m;
}

void EmpiricalMeasure::write_csv(std::ostream& out) const {
    out << "index,value\n";
    char buf[64];
    for (std::size_t i = 0; i < sorted_.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, sorted_[i]);
        out << buf;
    }
}

double wasserstein2(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    if (mu.size() != nu.size())
        throw std::invalid_argument("wasserstein2: sample counts differ; resample first");
    const auto a = mu.sorted();
    const auto b = nu.sorted();
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.size()));
}

CenterResult center(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("center: empty input");
    double s = 0.0;
    for (double v : values) {
        if (!std::isfinite(v)) throw std::invalid_argument("center: non-finite value");
        s += v;
    }
    CenterResult r;
    r.mean = s / static_cast<double>(values.size());
    r.centered.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) r.centered[i] = values[i] - r.mean;
    return r;
}

JointEmpiricalMeasure::JointEmpiricalMeasure(std::vector<double> first, std::vector<double> second)
    : first_(std::move(first)), second_(std::move(second)) {
    if (first_.empty() || first_.size() != second_.size())
        throw std::invalid_argument("JointEmpiricalMeasure: empty or mismatched coordinate lists");
    double s1 = 0.0, s2 = 0.0, q1 = 0.0, q2 = 0.0;
    for (std::size_t i = 0; i < first_.size(); ++i) {
        const double a = first_[i], b = second_[i];
        if (!std::isfinite(a) || !std::isfinite(b))
            throw std::invalid_argument("JointEmpiricalMeasure: non-finite entry");
        s1 += a;
        s2 += b;
        q1 += a * a;
        q2 += b * b;
    }
    const double n = static_cast<double>(first_.size());
    mean_first_ = s1 / n;
    mean_second_ = s2 / n;
    sm_first_ = q1 / n;
    sm_second_ = q2 / n;
    first_centered_.resize(first_.size());
    for (std::size_t i = 0; i < first_.size(); ++i) first_centered_[i] = first_[i] - mean_first_;
}

}  // namespace mf
