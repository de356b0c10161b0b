#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ifa/types.hpp"

namespace ifa::cli {

/// Malformed or unreadable input file; maps to exit code 2.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ResponseTable {
  std::vector<std::string> item_names;
  Eigen::MatrixXi responses;  ///< kMissing for "NA"
};

/// Header of item names, then one row per person of integer codes or NA.
ResponseTable read_responses_csv(const std::string& path);
void write_responses_csv(const std::string& path, const std::vector<std::string>& item_names,
                         const Eigen::MatrixXi& responses);

/// J rows of K comma-separated 0/1 entries, no header.
QMatrix read_q_matrix(const std::string& path);

/// Fitted or generating parameters as stored on disk.
struct ParameterFile {
  std::string estimator;
  ModelSpec model;
  std::vector<std::string> item_names;
  std::vector<ItemParams> items;
  Eigen::MatrixXd correlation;
  PersonFactors thetas;
  bool converged = true;
  int iterations = 0;
  std::uint64_t seed = 0;
};

/// JSON with a fixed key order; one record per item, loadings as a flat list.
std::string parameters_to_json(const ParameterFile& params);
ParameterFile read_parameters(const std::string& path);

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(const std::string& bytes);

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

}  // namespace ifa::cli
