#pragma once

#include <json.hpp>

#include <fstream>
#include <stdexcept>
#include <string>

// Frozen reference tables written by tests/oracles/generate.py.
inline nlohmann::json load_oracle(const std::string& name) {
    std::ifstream in(std::string(ORACLE_DIR) + "/" + name);
    if (!in) throw std::runtime_error("missing oracle file " + name);
    return nlohmann::json::parse(in);
}

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}
