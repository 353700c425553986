#include "lsfm/io/serialize.hpp"

#include <cmath>

#include "lsfm/errors.hpp"

namespace lsfm::io {

namespace {

double get_number(const json& j, const std::string& key, double fallback, const std::string& path) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(path + "." + key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(path + "." + key, "expected a finite number");
  return d;
}

std::size_t get_count(const json& j, const std::string& key, std::size_t fallback,
                      const std::string& path) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ConfigError(path + "." + key, "expected a nonnegative integer");
  return v.get<std::size_t>();
}

json num(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? json("nan") : json(v > 0 ? "inf" : "-inf");
}

}  // namespace

phantom::DatasetParams dataset_params_from_json(const json& j, phantom::DatasetParams p,
                                                const std::string& prefix) {
  if (!j.is_object()) throw ConfigError(prefix, "expected an object");
  if (j.contains("kind")) {
    const auto k = get_count(j, "kind", 1, prefix);
    if (k < 1 || k > 3) throw ConfigError(prefix + ".kind", "dataset kind must be 1, 2 or 3");
    p.kind = static_cast<phantom::DatasetKind>(k);
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    const auto path = prefix + ".grid";
    if (!g.is_object()) throw ConfigError(path, "expected {nx, ny, s1, y1}");
    p.grid.nx = get_count(g, "nx", p.grid.nx, path);
    p.grid.ny = get_count(g, "ny", p.grid.ny, path);
    p.grid.domain.s1 = get_number(g, "s1", p.grid.domain.s1, path);
    p.grid.domain.y1 = get_number(g, "y1", p.grid.domain.y1, path);
    if (p.grid.nx < 8 || p.grid.ny < 8 || p.grid.nx > 4096 || p.grid.ny > 4096)
      throw ConfigError(path + ".nx", "grid sizes must lie in [8, 4096]");
  }
  if (j.contains("object_disk")) {
    const auto& d = j.at("object_disk");
    const auto path = prefix + ".object_disk";
    if (!d.is_object()) throw ConfigError(path, "expected {cx, cy, r}");
    p.object_disk.cx = get_number(d, "cx", p.object_disk.cx, path);
    p.object_disk.cy = get_number(d, "cy", p.object_disk.cy, path);
    p.object_disk.r = get_number(d, "r", p.object_disk.r, path);
  }
  if (j.contains("polygon")) {
    const auto& poly = j.at("polygon");
    const auto path = prefix + ".polygon";
    if (!poly.is_array()) throw ConfigError(path, "expected an array of [x, y] pairs");
    p.polygon.clear();
    for (std::size_t k = 0; k < poly.size(); ++k) {
      const auto& v = poly[k];
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ConfigError(path + "[" + std::to_string(k) + "]", "expected [x, y]");
      p.polygon.push_back({v[0].get<double>(), v[1].get<double>()});
    }
  }
  p.support_radius = get_number(j, "support_radius", p.support_radius, prefix);
  if (j.contains("blobs")) {
    const auto& b = j.at("blobs");
    const auto path = prefix + ".blobs";
    if (!b.is_object()) throw ConfigError(path, "expected an object");
    p.blobs.count = get_count(b, "count", p.blobs.count, path);
    p.blobs.radius_min = get_number(b, "radius_min", p.blobs.radius_min, path);
    p.blobs.radius_max = get_number(b, "radius_max", p.blobs.radius_max, path);
    p.blobs.value_min = get_number(b, "value_min", p.blobs.value_min, path);
    p.blobs.value_max = get_number(b, "value_max", p.blobs.value_max, path);
  }
  p.margin_cells = get_count(j, "margin_cells", p.margin_cells, prefix);
  p.w1 = get_number(j, "w1", p.w1, prefix);
  p.w2 = get_number(j, "w2", p.w2, prefix);
  p.diffusion_ratio = get_number(j, "diffusion_ratio", p.diffusion_ratio, prefix);
  p.attenuation = get_number(j, "attenuation", p.attenuation, prefix);
  if (j.contains("mask_path")) {
    if (!j.at("mask_path").is_string()) throw ConfigError(prefix + ".mask_path", "expected a path");
    p.mask_path = j.at("mask_path").get<std::string>();
  }
  if (j.contains("mask_box")) {
    const auto& b = j.at("mask_box");
    if (!b.is_array() || b.size() != 4)
      throw ConfigError(prefix + ".mask_box", "expected [x_lo, x_hi, y_lo, y_hi]");
    for (std::size_t k = 0; k < 4; ++k) {
      if (!b[k].is_number()) throw ConfigError(prefix + ".mask_box", "expected numbers");
      p.mask_box[k] = b[k].get<double>();
    }
  }
  p.mask_peak = get_number(j, "mask_peak", p.mask_peak, prefix);
  return p;
}

json to_json(const phantom::DatasetParams& p) {
  json poly = json::array();
  for (const auto& v : (p.polygon.empty() && p.kind == phantom::DatasetKind::two_lobe
                            ? phantom::two_lobe_outline()
                            : p.polygon))
    poly.push_back({v[0], v[1]});
  return json{
      {"kind", static_cast<int>(p.kind)},
      {"grid", {{"nx", p.grid.nx}, {"ny", p.grid.ny}, {"s1", p.grid.domain.s1}, {"y1", p.grid.domain.y1}}},
      {"object_disk", {{"cx", p.object_disk.cx}, {"cy", p.object_disk.cy}, {"r", p.object_disk.r}}},
      {"polygon", poly},
      {"support_radius", p.support_radius},
      {"blobs",
       {{"count", p.blobs.count},
        {"radius_min", p.blobs.radius_min},
        {"radius_max", p.blobs.radius_max},
        {"value_min", p.blobs.value_min},
        {"value_max", p.blobs.value_max}}},
      {"margin_cells", p.margin_cells},
      {"w1", p.w1},
      {"w2", p.w2},
      {"diffusion_ratio", p.diffusion_ratio},
      {"attenuation", p.attenuation},
      {"mask_path", p.mask_path},
      {"mask_box", p.mask_box},
      {"mask_peak", p.mask_peak}};
}

std::vector<double> parse_sweep(const std::string& text, const std::string& field) {
  std::vector<double> parts;
  std::size_t s = 0;
  for (;;) {
    const auto c = text.find(':', s);
    const auto tok = text.substr(s, c == std::string::npos ? std::string::npos : c - s);
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError(field, "cannot parse '" + text + "' as a number or a:b:n range");
    }
    if (c == std::string::npos) break;
    s = c + 1;
  }
  if (parts.size() == 1) return parts;
  if (parts.size() != 3 || parts[2] < 1 || parts[2] != std::floor(parts[2]))
    throw ConfigError(field, "range must read a:b:n with integer n >= 1");
  const auto n = static_cast<std::size_t>(parts[2]);
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k)
    out[k] = n == 1 ? parts[0]
                    : parts[0] + (parts[1] - parts[0]) * static_cast<double>(k) /
                                     static_cast<double>(n - 1);
  return out;
}

std::vector<double> parse_sweep(const json& j, const std::string& field) {
  if (j.is_number()) return {j.get<double>()};
  if (j.is_string()) return parse_sweep(j.get<std::string>(), field);
  if (j.is_array()) {
    std::vector<double> out;
    for (const auto& v : j) {
      if (!v.is_number()) throw ConfigError(field, "expected an array of numbers");
      out.push_back(v.get<double>());
    }
    return out;
  }
  throw ConfigError(field, "expected a number, an array or an a:b:n range");
}

CsvTable field_csv(const heat::SpaceTimeField& f) {
  std::vector<std::string> header{"y"};
  std::vector<std::vector<double>> cols{f.grid().nodes()};
  for (std::size_t i = 0; i < f.time_count(); ++i) {
    header.push_back("t=" + fmt(f.times()[i]));
    auto r = f.row(i);
    cols.emplace_back(r.begin(), r.end());
  }
  return numeric_table(std::move(header), cols);
}

json field_sidecar(const heat::SpaceTimeField& f) {
  return json{{"dy", f.grid().step},
              {"y_lo", f.grid().lo},
              {"y_hi", f.grid().hi()},
              {"samples", f.grid().size},
              {"times", f.times()}};
}

CsvTable profile_csv(const heat::Profile1D& p) {
  return numeric_table({"y", "u"}, {p.ys(), p.values()});
}

json profile_sidecar(const heat::Profile1D& p) {
  return json{{"dy", p.grid().step},
              {"y_lo", p.grid().lo},
              {"y_hi", p.grid().hi()},
              {"samples", p.grid().size},
              {"support_lo", p.support_lo()},
              {"support_hi", p.support_hi()}};
}

CsvTable phantom_csv(const phantom::Phantom& p) {
  CsvTable t{{"i", "j", "x", "y", "mu", "lambda", "psi", "a", "object"}, {}};
  const auto& g = p.grid;
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) {
      const auto k = g.index(i, j);
      t.rows.push_back({std::to_string(i), std::to_string(j), fmt(g.x(i)), fmt(g.y(j)),
                        fmt(p.mu[k]), fmt(p.lambda[k]), fmt(p.psi[k]), fmt(p.a[k]),
                        std::to_string(p.object_mask[k])});
    }
  return t;
}

json phantom_manifest(const phantom::Phantom& p) {
  const auto lim = geom::scan_limits(p.object);
  std::size_t support = 0;
  for (double v : p.mu) support += v != 0.0;
  return json{{"params", to_json(p.params)},
              {"seed", p.seed},
              {"scan_limits", {lim.s_minus, lim.s_plus}},
              {"support_cells", support}};
}

CsvTable sigma_csv(const forward::SigmaProfile& p) {
  return numeric_table({"y", "sigma", "sigma_prime"}, {p.ys, p.sigma, p.sigma_prime});
}

json to_json(const forward::SigmaProfile& p) {
  const auto iv = forward::observation_interval(p);
  return json{{"s", p.s},
              {"side", p.side == heat::Side::left ? "left" : "right"},
              {"y_lo", p.y_lo},
              {"y_hi", p.y_hi},
              {"xi1", p.xi1},
              {"xi2", p.xi2},
              {"T1", p.T1_raw},
              {"T2", p.T2_raw},
              {"T", p.T},
              {"T1_equals_T2", std::fabs(p.T1_raw - p.T2_raw) <= 1e-10 * p.T},
              {"argmax", p.argmax()},
              {"intervals", {{iv.left.lo, iv.left.hi}, {iv.right.lo, iv.right.hi}}}};
}

CsvTable measurement_csv(const forward::MeasurementSet& m) {
  CsvTable t{{"index", "side", "y"}, {}};
  for (double s : m.depths) t.header.push_back("p_s=" + fmt(s));
  const auto n = m.heights.size();
  for (std::size_t r = 0; r < 2 * n; ++r) {
    std::vector<std::string> row{std::to_string(r), r < n ? "left" : "right", fmt(m.heights[r % n])};
    for (std::size_t k = 0; k < m.depths.size(); ++k) row.push_back(fmt(m.p[k][r]));
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable block_csv(const linsys::SystemBlock& b) {
  CsvTable t{{"row", "side", "y", "b"}, {}};
  for (std::size_t j = 0; j < b.A.cols(); ++j) t.header.push_back("a" + std::to_string(j));
  for (std::size_t i = 0; i < b.A.rows(); ++i) {
    std::vector<std::string> row{std::to_string(i), i < b.m1() ? "left" : "right",
                                 fmt(b.height_of(i)), fmt(b.b[i])};
    for (std::size_t j = 0; j < b.A.cols(); ++j) row.push_back(fmt(b.A(i, j)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

json block_manifest(const linsys::SystemBlock& b) {
  return json{{"s", b.s},
              {"rows", b.A.rows()},
              {"cols", b.A.cols()},
              {"row_mask", b.row_mask},
              {"column_mask", b.column_mask}};
}

json to_json(const stability::StabilityReport& r) {
  json sweep = json::array();
  for (const auto& [T, c] : r.T_sweep) sweep.push_back({num(T), num(c)});
  json ratios = json::array();
  for (double v : r.ratios) ratios.push_back(num(v));
  json j{{"R", r.R},       {"t", r.t},         {"t1", r.t1},
         {"t2", r.t2},     {"alpha", r.alpha}, {"C7", num(r.C7)},
         {"C8", num(r.C8)}, {"margin", num(r.margin)}, {"violations", r.violations},
         {"ratios", ratios}, {"T_sweep", sweep}};
  if (r.seed) j["seed"] = *r.seed;
  return j;
}

}  // namespace lsfm::io
