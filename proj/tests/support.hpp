// Helpers shared by the test binaries.
#pragma once

#include "rtlcse/interp.hpp"
#include "rtlcse/ir.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace testsupport {

inline std::string read_fixture(const std::string &name) {
  std::ifstream in(std::string(RTLCSE_FIXTURE_DIR) + "/" + name, std::ios::binary);
  if (!in)
    throw std::runtime_error("missing fixture " + name);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline rtlcse::ir::Program fixture_program(const std::string &name) {
  return rtlcse::ir::parse(read_fixture(name));
}

/// Parses a program made of `body` plus three 256-byte globals A, B, C.
inline rtlcse::ir::Program program(const std::string &body) {
  return rtlcse::ir::parse("global \"A\" size 256\nglobal \"B\" size 256\nglobal \"C\" size 256\n" + body);
}

/// The single function `f` of a program built by `program`.
inline rtlcse::ir::Function function(const std::string &body) {
  auto p = program(body);
  return p.functions.begin()->second;
}

inline rtlcse::interp::Value syrk_alpha() { return rtlcse::interp::Value::f64(0.5); }

} // namespace testsupport
