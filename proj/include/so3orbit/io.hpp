#pragma once

#include <string>

#include <json.hpp>

#include "so3orbit/moments.hpp"
#include "so3orbit/recover.hpp"
#include "so3orbit/signal.hpp"
#include "so3orbit/simulate.hpp"

namespace so3orbit {

using json = nlohmann::ordered_json;

/// Version written into every file; readers reject anything else.
constexpr int kFormatVersion = 1;

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Conversions to and from JSON documents. Each document carries
// format_version and kind; complex matrices are stored as "re" and "im"
// arrays of rows. Loaders throw ParseError naming the offending field, and
// UnsupportedVersion on a version mismatch.
json to_json(const Signal& x);
json to_json(const Distribution& rho);
json first_moment_to_json(const FirstMoment& m1);
json to_json(const SecondMoment& m2);
json moments_to_json(const FirstMoment& m1, const SecondMoment& m2);
/// Materialized observations (with the rotations omitted).
json to_json(const ObservationSet& obs);

/// Recovery report: the stage table plus the overall errors.
json to_json(const RecoveryReport& report);

Signal signal_from_json(const json& j);
Distribution distribution_from_json(const json& j);
FirstMoment first_moment_from_json(const json& j);
SecondMoment second_moment_from_json(const json& j);
void moments_from_json(const json& j, FirstMoment& m1, SecondMoment& m2);
ObservationSet observations_from_json(const json& j);

/// Reads and parses a document; the ParseError message includes line and column.
json read_json_file(const std::string& path);
/// Writes with two-space indentation and a trailing newline.
void write_json_file(const json& j, const std::string& path);
/// The "kind" field of a document, after the version check.
std::string document_kind(const json& j);

void save_signal(const Signal& x, const std::string& path);
Signal load_signal(const std::string& path);
void save_distribution(const Distribution& rho, const std::string& path);
Distribution load_distribution(const std::string& path);
void save_moments(const FirstMoment& m1, const SecondMoment& m2, const std::string& path);
void load_moments(const std::string& path, FirstMoment& m1, SecondMoment& m2);
void save_observations(const ObservationSet& obs, const std::string& path);
ObservationSet load_observations(const std::string& path);

void write_text_file(const std::string& text, const std::string& path);

}  // namespace so3orbit
