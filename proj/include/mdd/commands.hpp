#pragma once

#include <string>

#include "mdd/config.hpp"

namespace mdd {

// Each command returns the complete output document; nothing is written on error.
std::string cmd_price(const RunConfig& cfg);
std::string cmd_boundary(const RunConfig& cfg);  // CSV or JSON per output.format
std::string cmd_gstar(const RunConfig& cfg);
std::string cmd_verify(const RunConfig& cfg);
std::string cmd_mc_check(const RunConfig& cfg);

// Structured error document for a failure, with the config hash when one is known.
std::string error_document(const std::string& code, const std::string& message, const std::string& config_hash);

// Shortest round-trip decimal form, independent of the C locale; "inf", "-inf", "nan" otherwise.
std::string format_double(double v);

}  // namespace mdd
