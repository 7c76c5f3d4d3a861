#include "so3orbit/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace so3orbit {

namespace {

std::string triple_name(int l1, int l2, int l3) {
  return "(" + std::to_string(l1) + "," + std::to_string(l2) + "," + std::to_string(l3) + ")";
}

const json& field(const json& j, const char* name, const std::string& ctx) {
  if (!j.is_object()) throw ParseError(ctx + ": expected an object");
  auto it = j.find(name);
  if (it == j.end()) throw ParseError(ctx + ": missing field '" + name + "'");
  return *it;
}

double number(const json& v, const std::string& ctx) {
  if (!v.is_number()) throw ParseError(ctx + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ParseError(ctx + ": non-finite value");
  return d;
}

int integer(const json& j, const char* name, const std::string& ctx, int lo) {
  const json& v = field(j, name, ctx);
  if (!v.is_number_integer()) throw ParseError(ctx + ": field '" + name + "' must be an integer");
  const long long i = v.get<long long>();
  if (i < lo || i > 1000000) {
    throw ParseError(ctx + ": field '" + name + "' out of range (" + std::to_string(i) + ")");
  }
  return static_cast<int>(i);
}

bool flag(const json& j, const char* name, const std::string& ctx) {
  auto it = j.find(name);
  if (it == j.end()) return false;
  if (!it->is_boolean()) throw ParseError(ctx + ": field '" + name + "' must be true or false");
  return it->get<bool>();
}

void put_matrix(json& obj, const CMatrix& a) {
  json re = json::array(), im = json::array();
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    json rr = json::array(), ri = json::array();
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      rr.push_back(a(r, c).real());
      ri.push_back(a(r, c).imag());
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ri));
  }
  obj["re"] = std::move(re);
  obj["im"] = std::move(im);
}

CMatrix get_matrix(const json& obj, Eigen::Index rows, Eigen::Index cols, const std::string& ctx) {
  const json& re = field(obj, "re", ctx);
  const json& im = field(obj, "im", ctx);
  auto check = [&](const json& part, const char* name) {
    if (!part.is_array() || static_cast<Eigen::Index>(part.size()) != rows) {
      throw ParseError(ctx + ": '" + name + "' must have " + std::to_string(rows) + " rows");
    }
    for (const auto& row : part) {
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
        throw ParseError(ctx + ": '" + name + "' rows must have " + std::to_string(cols) +
                         " entries");
      }
    }
  };
  check(re, "re");
  check(im, "im");
  CMatrix a(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      a(r, c) = cplx(number(re[r][c], ctx), number(im[r][c], ctx));
  return a;
}

json header(const char* kind) {
  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = kind;
  return j;
}

void expect_kind(const json& j, const char* kind) {
  const std::string k = document_kind(j);
  if (k != kind) throw ParseError(std::string("expected kind '") + kind + "', found '" + k + "'");
}

json bands_json(const std::vector<CMatrix>& bands) {
  json arr = json::array();
  for (std::size_t l = 0; l < bands.size(); ++l) {
    json b;
    b["l"] = static_cast<int>(l);
    put_matrix(b, bands[l]);
    arr.push_back(std::move(b));
  }
  return arr;
}

// Band l is looked up by its "l" field so that a missing band is reported by
// number rather than as a length mismatch.
std::vector<CMatrix> read_bands(const json& j, int L, int cols_or_neg, const std::string& ctx) {
  const json& arr = field(j, "bands", ctx);
  if (!arr.is_array()) throw ParseError(ctx + ": 'bands' must be an array");
  std::vector<const json*> by_l(L + 1, nullptr);
  for (const auto& b : arr) {
    const int l = integer(b, "l", ctx + " band entry", 0);
    if (l > L) throw ParseError(ctx + ": band " + std::to_string(l) + " exceeds L");
    if (by_l[l] != nullptr) throw ParseError(ctx + ": duplicate band " + std::to_string(l));
    by_l[l] = &b;
  }
  std::vector<CMatrix> bands(L + 1);
  for (int l = 0; l <= L; ++l) {
    if (by_l[l] == nullptr) throw ParseError(ctx + ": missing band " + std::to_string(l));
    const int cols = cols_or_neg < 0 ? band_dim(l) : cols_or_neg;
    bands[l] = get_matrix(*by_l[l], band_dim(l), cols, ctx + " band " + std::to_string(l));
  }
  return bands;
}

json signal_body(const Signal& x, const char* kind) {
  json j = header(kind);
  j["L"] = x.L;
  j["R"] = x.R;
  j["real_symmetric"] = x.real_symmetric;
  j["bands"] = bands_json(x.bands);
  return j;
}

Signal signal_body_from(const json& j, const std::string& ctx) {
  const int L = integer(j, "L", ctx, 0);
  const int R = integer(j, "R", ctx, 1);
  Signal x(L, R);
  x.real_symmetric = flag(j, "real_symmetric", ctx);
  x.bands = read_bands(j, L, R, ctx);
  return x;
}

template <class F>
auto guarded(const std::string& ctx, F&& f) {
  try {
    return f();
  } catch (const ParseError&) {
    throw;
  } catch (const json::exception& e) {
    throw ParseError(ctx + ": " + e.what());
  }
}

}  // namespace

std::string document_kind(const json& j) {
  const json& v = field(j, "format_version", "document");
  if (!v.is_number_integer()) throw ParseError("document: format_version must be an integer");
  if (v.get<long long>() != kFormatVersion) {
    throw UnsupportedVersion("unsupported format_version " + v.dump() + " (this build reads " +
                             std::to_string(kFormatVersion) + ")");
  }
  const json& k = field(j, "kind", "document");
  if (!k.is_string()) throw ParseError("document: kind must be a string");
  return k.get<std::string>();
}

json to_json(const Signal& x) { return signal_body(x, "signal"); }

json first_moment_to_json(const FirstMoment& m1) { return signal_body(m1, "first_moment"); }

json to_json(const Distribution& rho) {
  json j = header("distribution");
  j["L"] = rho.L;
  j["in_plane"] = rho.in_plane;
  j["bands"] = bands_json(rho.bands);
  return j;
}

json to_json(const SecondMoment& m2) {
  json j = header("second_moment");
  j["L"] = m2.L;
  j["R"] = m2.R;
  j["sigma_used"] = m2.sigma_used;
  if (m2.n_used) {
    j["n_used"] = *m2.n_used;
  } else {
    j["n_used"] = nullptr;
  }
  j["warnings"] = m2.warnings;
  json comps = json::array();
  for (const auto& [t, c] : m2.components) {
    json e;
    e["l1"] = t[0];
    e["l2"] = t[1];
    e["l3"] = t[2];
    put_matrix(e, c);
    comps.push_back(std::move(e));
  }
  j["components"] = std::move(comps);
  return j;
}

json moments_to_json(const FirstMoment& m1, const SecondMoment& m2) {
  json j = header("moments");
  j["first"] = first_moment_to_json(m1);
  j["second"] = to_json(m2);
  return j;
}

json to_json(const ObservationSet& obs) {
  json j = header("observations");
  j["L"] = obs.L_;
  j["R"] = obs.R_;
  j["sigma"] = obs.sigma_;
  j["snr"] = obs.snr;
  j["noise_mode"] = to_string(obs.mode);
  json data = json::array();
  for (const auto& y : obs.data) data.push_back(json{{"bands", bands_json(y.bands)}});
  j["observations"] = std::move(data);
  if (!obs.noise_energy.empty()) j["noise_energy"] = obs.noise_energy;
  return j;
}

json to_json(const RecoveryReport& report) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json j = header("recovery_report");
  j["mode"] = report.mode;
  j["in_plane"] = report.in_plane;
  j["signal_error"] = report.signal_error ? num(*report.signal_error) : json(nullptr);
  j["distribution_error"] = report.distribution_error ? num(*report.distribution_error) : json(nullptr);
  j["seconds"] = report.seconds;
  json stages = json::array();
  for (const auto& s : report.stages) {
    json e;
    e["band"] = s.band;
    e["kind"] = s.kind;
    e["rows"] = s.rows;
    e["cols"] = s.cols;
    e["cond"] = num(s.cond);
    e["residual"] = num(s.residual);
    e["error"] = s.error ? num(*s.error) : json(nullptr);
    e["seconds"] = s.seconds;
    e["status"] = s.status;
    e["message"] = s.message;
    stages.push_back(std::move(e));
  }
  j["stages"] = std::move(stages);
  return j;
}

Signal signal_from_json(const json& j) {
  return guarded("signal", [&] {
    expect_kind(j, "signal");
    return signal_body_from(j, "signal");
  });
}

FirstMoment first_moment_from_json(const json& j) {
  return guarded("first_moment", [&] {
    expect_kind(j, "first_moment");
    return signal_body_from(j, "first_moment");
  });
}

Distribution distribution_from_json(const json& j) {
  return guarded("distribution", [&] {
    expect_kind(j, "distribution");
    const int L = integer(j, "L", "distribution", 0);
    Distribution rho(L);
    rho.in_plane = flag(j, "in_plane", "distribution");
    rho.bands = read_bands(j, L, -1, "distribution");
    if (std::abs(rho.bands[0](0, 0) - cplx(1.0)) > 1e-12) {
      throw ParseError("distribution band 0: must equal 1");
    }
    rho.bands[0](0, 0) = 1.0;
    return rho;
  });
}

SecondMoment second_moment_from_json(const json& j) {
  return guarded("second_moment", [&] {
    const std::string ctx = "second_moment";
    expect_kind(j, "second_moment");
    const int L = integer(j, "L", ctx, 0);
    const int R = integer(j, "R", ctx, 1);
    SecondMoment m = SecondMoment::zeros(L, R);
    m.sigma_used = number(field(j, "sigma_used", ctx), ctx + " sigma_used");
    if (auto it = j.find("n_used"); it != j.end() && !it->is_null()) {
      if (!it->is_number_unsigned()) throw ParseError(ctx + ": n_used must be a count or null");
      m.n_used = it->get<std::uint64_t>();
    }
    if (auto it = j.find("warnings"); it != j.end()) {
      m.warnings = it->get<std::vector<std::string>>();
    }
    const json& comps = field(j, "components", ctx);
    if (!comps.is_array()) throw ParseError(ctx + ": 'components' must be an array");
    std::map<Triple, bool> seen;
    for (const auto& e : comps) {
      const Triple t{integer(e, "l1", ctx, 0), integer(e, "l2", ctx, 0), integer(e, "l3", ctx, 0)};
      const std::string name = ctx + " component " + triple_name(t[0], t[1], t[2]);
      if (!m.has(t[0], t[1], t[2])) throw ParseError(name + ": not an admissible triple");
      m.at(t[0], t[1], t[2]) = get_matrix(e, band_dim(t[0]), static_cast<Eigen::Index>(R) * R, name);
      seen[t] = true;
    }
    for (const auto& [t, c] : m.components) {
      if (!seen.count(t)) {
        throw ParseError(ctx + ": missing component " + triple_name(t[0], t[1], t[2]));
      }
    }
    return m;
  });
}

void moments_from_json(const json& j, FirstMoment& m1, SecondMoment& m2) {
  guarded("moments", [&] {
    expect_kind(j, "moments");
    m1 = first_moment_from_json(field(j, "first", "moments"));
    m2 = second_moment_from_json(field(j, "second", "moments"));
    if (m1.L != m2.L || m1.R != m2.R) throw ParseError("moments: first and second disagree on L or R");
    return 0;
  });
}

ObservationSet observations_from_json(const json& j) {
  return guarded("observations", [&] {
    const std::string ctx = "observations";
    expect_kind(j, "observations");
    ObservationSet obs;
    obs.L_ = integer(j, "L", ctx, 0);
    obs.R_ = integer(j, "R", ctx, 1);
    obs.sigma_ = number(field(j, "sigma", ctx), ctx + " sigma");
    obs.snr = j.contains("snr") && j["snr"].is_number() ? j["snr"].get<double>() : 0.0;
    const json& mode = field(j, "noise_mode", ctx);
    try {
      obs.mode = noise_mode_from_string(mode.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ParseError(ctx + ": " + e.what());
    }
    const json& data = field(j, "observations", ctx);
    if (!data.is_array() || data.empty()) throw ParseError(ctx + ": 'observations' must be a nonempty array");
    obs.data.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      Signal y(obs.L_, obs.R_);
      y.bands = read_bands(data[i], obs.L_, obs.R_, ctx + " entry " + std::to_string(i));
      obs.data.push_back(std::move(y));
    }
    if (auto it = j.find("noise_energy"); it != j.end()) {
      obs.noise_energy = it->get<std::vector<double>>();
      if (obs.noise_energy.size() != obs.data.size()) {
        throw ParseError(ctx + ": noise_energy length differs from the observation count");
      }
    }
    return obs;
  });
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_text_file(const std::string& text, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("write to '" + path + "' failed");
}

void write_json_file(const json& j, const std::string& path) { write_text_file(j.dump(2) + "\n", path); }

namespace {

template <class T, class F>
T load_with(const std::string& path, F&& from) {
  const json j = read_json_file(path);
  try {
    return from(j);
  } catch (const UnsupportedVersion& e) {
    throw UnsupportedVersion(path + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace

void save_signal(const Signal& x, const std::string& path) { write_json_file(to_json(x), path); }
Signal load_signal(const std::string& path) {
  return load_with<Signal>(path, [](const json& j) { return signal_from_json(j); });
}
void save_distribution(const Distribution& rho, const std::string& path) {
  write_json_file(to_json(rho), path);
}
Distribution load_distribution(const std::string& path) {
  return load_with<Distribution>(path, [](const json& j) { return distribution_from_json(j); });
}
void save_moments(const FirstMoment& m1, const SecondMoment& m2, const std::string& path) {
  write_json_file(moments_to_json(m1, m2), path);
}
void load_moments(const std::string& path, FirstMoment& m1, SecondMoment& m2) {
  load_with<int>(path, [&](const json& j) {
    moments_from_json(j, m1, m2);
    return 0;
  });
}
void save_observations(const ObservationSet& obs, const std::string& path) {
  write_json_file(to_json(obs), path);
}
ObservationSet load_observations(const std::string& path) {
  return load_with<ObservationSet>(path, [](const json& j) { return observations_from_json(j); });
}

}  // namespace so3orbit
