#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "njode/datasets.hpp"
#include "njode/model.hpp"
#include "njode/parallel.hpp"

namespace njode {

enum class ReferenceKind { Analytic, Pf, Kalman, Stored };
ReferenceKind reference_kind_from_string(const std::string& s);
std::string to_string(ReferenceKind k);

/// Reference prediction trajectories in ForwardTrace shape (H left empty).
/// Analytic covers BMDrift (Gaussian conditioning, with the second moment
/// when the dataset carries mu^2), BMFilter, BMClass and GBMSelf; Kalman
/// covers BMDrift; Pf runs the SIS particle filter per test path (GBM/CIR).
std::vector<ForwardTrace> build_reference_traces(const Dataset& ds, ReferenceKind kind,
                                                 int pf_particles, std::uint64_t seed,
                                                 par::Exec exec = par::Exec::OpenMP,
                                                 int* pf_reset_events = nullptr);

/// Model prediction traces over a dataset (evaluation mode).
std::vector<ForwardTrace> model_traces(const NjodeParams& params, const Dataset& ds,
                                       par::Exec exec = par::Exec::OpenMP);

/// Columnar trace schema shared by model and baseline outputs:
/// path,time,is_obs,<name>,...,left_<name>,...
void write_traces_csv(const std::vector<ForwardTrace>& traces,
                      const std::vector<std::string>& names, const std::string& path);
std::vector<ForwardTrace> read_traces_csv(const std::string& path);

/// Observation times/values of input coordinate 0 with mask 1, excluding t_0
/// when exclude_t0 is set (deterministic starting points carry no
/// information for the Gaussian posteriors).
void observed_input_series(const PathSample& s, bool exclude_t0, std::vector<double>& times,
                           std::vector<double>& values);

}  // namespace njode
