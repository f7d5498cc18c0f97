#pragma once

#include "quasidiff/config.hpp"

#include <string>

inline qd::QuasiPair pair_json(const std::string& text) { return qd::parse_pair(nlohmann::json::parse(text)).validate(); }
inline qd::PairConfig config_json(const std::string& text) { return qd::parse_pair(nlohmann::json::parse(text)); }
inline std::string data_file(const std::string& name) { return std::string(QD_DATA_DIR) + "/" + name; }
