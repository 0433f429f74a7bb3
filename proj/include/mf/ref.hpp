#pragma once

#include "mf/coeffs.hpp"
#include "mf/forward.hpp"
#include "mf/grid.hpp"

// Plain single-threaded reference implementations of the data-parallel
// kernels, kept for testing and benchmarking the OpenMP paths against.
// They use straight left-to-right sums, so agreement with the chunked
// production reductions is to rounding, not bitwise.
namespace mf::ref {

double sum(std::span<const double> xs);
double mean(std::span<const double> xs);

ParticleEnsemble simulate_mkv(const SdeCoefficientSpec& spec, double x0, const TimeGrid& grid,
                              const NoiseBank& noise, const SimOptions& opts = {});

ParticleEnsemble simulate_controlled(const ControlProblemSpec& problem, const ControlGrid& u,
                                     const TimeGrid& grid, const NoiseBank& noise,
                                     const SimOptions& opts = {});

// Generic O(N^2) interaction sum: out[i] = (1/N) sum_j kernel(i, j) * w[j].
void interaction_sum(int n, const std::function<double(int, int)>& kernel,
                     std::span<const double> w, std::span<double> out);

}  // namespace mf::ref
