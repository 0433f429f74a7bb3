#pragma once

#include <ostream>
#include <span>
#include <vector>

#include "mf/common.hpp"

namespace mf {

// Uniform-weight empirical measure on the real line. Samples are kept
// sorted ascending; mean and second moment are accumulated left to
// right over the sorted storage so they do not depend on the input
// order or on the worker count.
class EmpiricalMeasure {
public:
    static EmpiricalMeasure from_samples(std::vector<double> values);

    // Trusted path for callers that already hold sorted data (e.g. a
    // centered copy of an existing measure). Sortedness is checked.
    static EmpiricalMeasure from_sorted(std::vector<double> values);

    std::size_t size() const { return sorted_.size(); }
    double mean() const { return mean_; }
    double second_moment() const { return second_; }
    double variance() const { return second_ - mean_ * mean_; }
    std::span<const double> sorted() const { return sorted_; }

    // Fixed-order average of fn over the samples.
    template <class F>
    double mean_of(F&& fn) const {
        double acc = 0.0;
        for (double v : sorted_) acc += fn(v);
        return acc / static_cast<double>(sorted_.size());
    }

    // One row per sample: index,value
    void write_csv(std::ostream& out) const;

private:
    EmpiricalMeasure() = default;
    void finish();  // computes cached moments, validates

    std::vector<double> sorted_;
    double mean_ = 0.0;
    double second_ = 0.0;
};

// Exact 2-Wasserstein distance between equal-count uniform empirical
// measures: in one dimension the sorted coupling is optimal.
double wasserstein2(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

struct CenterResult {
    std::vector<double> centered;
    double mean = 0.0;
};

CenterResult center(std::span<const double> values);

// Uniform-weight cloud of (first, second) pairs standing in for a joint
// law. Kept in insertion (particle) order; the first-coordinate-centered
// copy is precomputed so driver evaluations stay O(1) after construction.
class JointEmpiricalMeasure {
public:
    JointEmpiricalMeasure(std::vector<double> first, std::vector<double> second);

    std::size_t size() const { return first_.size(); }
    std::span<const double> first() const { return first_; }
    std::span<const double> second() const { return second_; }
    std::span<const double> first_centered() const { return first_centered_; }

    double mean_first() const { return mean_first_; }
    double mean_second() const { return mean_second_; }
    double second_moment_first() const { return sm_first_; }
    double second_moment_second() const { return sm_second_; }

    template <class F>
    double mean_of(F&& fn) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < first_.size(); ++i) acc += fn(first_[i], second_[i]);
        return acc / static_cast<double>(first_.size());
    }

    // Average of fn over (mean_shift + centered_first, second); this is
    // the form drivers in tilde form consume.
    template <class F>
    double mean_of_shifted(double mean_shift, F&& fn) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < first_.size(); ++i)
            acc += fn(mean_shift + first_centered_[i], second_[i]);
        return acc / static_cast<double>(first_.size());
    }

private:
    std::vector<double> first_, second_, first_centered_;
    double mean_first_ = 0.0, mean_second_ = 0.0;
    double sm_first_ = 0.0, sm_second_ = 0.0;
};

}  // namespace mf
