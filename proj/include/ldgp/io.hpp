#pragma once

#include "ldgp/deep.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace ldgp {

struct Table {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

/// Parses RFC-4180 CSV text with a mandatory header row and numeric cells.
Table parse_csv(const std::string& text);
Table read_csv(const std::filesystem::path& path);

std::string format_csv(const std::vector<std::vector<std::string>>& rows);
std::string format_csv(const std::vector<std::string>& header, const Eigen::MatrixXd& values);
std::string format_number(double v);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);

/// Linked emulator bundle: the network plus every node's model.
json bundle_to_json(const LDGPEmulator& emulator);
LDGPEmulator bundle_from_json(const json& j);

/// Exit code for an exception: 2 validation, 3 numerical, 4 I/O, 1 otherwise.
int exit_code_for(const std::exception& e);

}  // namespace ldgp
