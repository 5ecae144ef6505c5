#pragma once

// Canonical click-log format: UTF-8, one JSON object per line.
//
//   {"format":"clicklog","version":1}                      (optional header)
//   {"kind":"carousel","topics":["t1","t2"],"items":[["a","b"],["c","d"]],"clicks":[[0,1],[0,0]]}
//
// "topics" appears only for carousels. write_log always emits the header.

#include "clickmodel/core.hpp"

#include <iosfwd>

namespace clickmodel {

/// Throws ParseError (with the 1-based line number) on malformed input and
/// ValidationError-derived errors for records violating a session invariant.
ClickLog parse_log(std::istream& source);

/// Throws Error if the sink reports a write failure.
void write_log(const ClickLog& log, std::ostream& sink);

ClickLog read_log_file(const std::string& path);
void write_log_file(const ClickLog& log, const std::string& path);

}  // namespace clickmodel
