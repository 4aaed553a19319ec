#include "puzzlemeasure/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "puzzlemeasure/lab.hpp"
#include "puzzlemeasure/measure.hpp"
#include "puzzlemeasure/modulus.hpp"
#include "puzzlemeasure/nest.hpp"
#include "puzzlemeasure/png_writer.hpp"
#include "puzzlemeasure/potential.hpp"
#include "puzzlemeasure/puzzle.hpp"

namespace puzzlemeasure {

using nlohmann::json;

namespace {

const char* const kKeys[] = {"l",       "c",     "G0",        "max_depth", "partition_depth", "horizon",
                             "T_max",   "N_cascade", "delta_tol", "grid_n",  "seed",            "output_dir",
                             "rays",    "stars", "koebe_branches", "transport_triples", "figures"};

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::kConfig, what); }

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(std::string("bad value for ") + key + ": " + e.what());
  }
}

template <class F>
auto stage(const char* name, F&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    std::string detail = e.what();
    const std::string prefix = std::string(to_string(e.kind())) + ": ";
    if (detail.rfind(prefix, 0) == 0) detail.erase(0, prefix.size());
    throw Error(e.kind(), std::string("stage ") + name + ": " + detail);
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json cx_json(Cx z) { return json::array({z.real(), z.imag()}); }

json address_json(const Address& a) { return json(std::vector<int>(a.begin(), a.end())); }

struct Report {
  json body;
  json checks = json::array();
  json artifacts = json::array();
  const RunConfig& config;

  Report(const char* command, const RunConfig& cfg) : config(cfg) {
    body["schema_version"] = kSchemaVersion;
    body["command"] = command;
    body["config_hash"] = config_hash(cfg);
    body["config"] = to_json(cfg);
  }

  void check(const std::string& invariant, bool pass, bool hard, json detail = nullptr) {
    json c{{"invariant", invariant}, {"pass", pass}, {"hard", hard}};
    if (!detail.is_null()) c["detail"] = std::move(detail);
    checks.push_back(std::move(c));
  }

  std::filesystem::path path(const std::string& name) const { return std::filesystem::path(config.output_dir) / name; }

  void text(const std::string& name, const std::string& content) {
    std::ofstream out(path(name), std::ios::binary);
    if (!out) throw Error(ErrorKind::kConfig, "cannot write " + path(name).string());
    out << content;
    artifacts.push_back(name);
  }

  void png(const std::string& name, const Image& img) {
    if (!config.figures) return;
    write_png(path(name).string(), img);
    artifacts.push_back(name);
  }

  json finish(const std::string& name) {
    body["checks"] = checks;
    artifacts.push_back(name + ".json");
    body["artifacts"] = artifacts;
    std::ofstream out(path(name + ".json"), std::ios::binary);
    if (!out) throw Error(ErrorKind::kConfig, "cannot write " + path(name + ".json").string());
    out << body.dump(2) << '\n';
    return body;
  }
};

void prepare(const RunConfig& config) {
  validate(config);
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) config_error("cannot create output directory " + config.output_dir);
}

PotentialField make_field(const RunConfig& config) {
  return stage("dynamics", [&] { return PotentialField(UnicriticalMap(config.degree, config.c)); });
}

Puzzle make_puzzle(const PotentialField& field, const RunConfig& config) {
  return stage("puzzle", [&] {
    PuzzleOptions opt;
    opt.g0 = config.g0;
    for (const auto& star : config.stars) {
      std::vector<Angle> angles;
      for (const auto& r : star) angles.push_back(parse_angle(r));
      opt.stars.push_back(std::move(angles));
    }
    return Puzzle(field, opt);
  });
}

View view_for(const PotentialField& field) {
  const double r = std::min(field.escape_radius, 2.2);
  return View{Cx(0, 0), r, 400, 400};
}

Rgb palette(std::size_t i) {
  static const Rgb colours[] = {{230, 159, 0},  {86, 180, 233}, {0, 158, 115}, {240, 228, 66},
                                {0, 114, 178},  {213, 94, 0},   {204, 121, 167}, {150, 150, 150}};
  return colours[i % 8];
}

void fill_polygon(Image& img, const View& view, const std::vector<Cx>& poly, Rgb c) {
  if (poly.size() < 3) return;
  double x0 = poly[0].real(), x1 = x0, y0 = poly[0].imag(), y1 = y0;
  for (Cx z : poly) {
    x0 = std::min(x0, z.real());
    x1 = std::max(x1, z.real());
    y0 = std::min(y0, z.imag());
    y1 = std::max(y1, z.imag());
  }
  int px0, py0, px1, py1;
  view.pixel(Cx(x0, y1), px0, py0);
  view.pixel(Cx(x1, y0), px1, py1);
  px0 = std::max(px0, 0);
  py0 = std::max(py0, 0);
  px1 = std::min(px1, view.width - 1);
  py1 = std::min(py1, view.height - 1);
  for (int y = py0; y <= py1; ++y) {
    for (int x = px0; x <= px1; ++x) {
      if (!point_in_polygon(view.point(x, y), poly)) continue;
      const Rgb old = img.get(x, y);
      // keep the Julia backdrop visible under the fill
      img.set(x, y, {static_cast<std::uint8_t>((old.r + 2 * c.r) / 3), static_cast<std::uint8_t>((old.g + 2 * c.g) / 3),
                     static_cast<std::uint8_t>((old.b + 2 * c.b) / 3)});
    }
  }
  draw_polyline(img, view, poly, {0, 0, 0}, true);
}

json periodic_summary(const UnicriticalMap& f, json& points) {
  int p_max = 1;
  for (std::size_t n = static_cast<std::size_t>(f.degree()); n * static_cast<std::size_t>(f.degree()) <= 64; ) {
    n *= static_cast<std::size_t>(f.degree());
    ++p_max;
  }
  bool repelling_only = true, parabolic = false;
  int attracting_period = 0;
  for (int p = 1; p <= p_max; ++p) {
    std::vector<FixedPointInfo> pts;
    if (p == 1) {
      pts = fixed_points(f).points;
    } else {
      pts = periodic_points(f, p);
    }
    for (const auto& q : pts) {
      repelling_only = repelling_only && q.cls == PointClass::kRepelling;
      parabolic = parabolic || q.cls == PointClass::kParabolic;
      if ((q.cls == PointClass::kAttracting || q.cls == PointClass::kSuperattracting) && attracting_period == 0) {
        attracting_period = p;
      }
      json e{{"period", p}, {"location", cx_json(q.location)}, {"multiplier", cx_json(q.multiplier)},
             {"class", std::string(to_string(q.cls))}};
      if (q.role) e["role"] = *q.role == FixedPointRole::kAlpha ? "alpha" : "beta";
      if (q.multiplicity > 1) e["multiplicity"] = q.multiplicity;
      points.push_back(std::move(e));
    }
  }
  return json{{"periods_scanned", p_max},
              {"repelling_only", repelling_only},
              {"parabolic", parabolic},
              {"attracting_period", attracting_period}};
}

/// Nest pieces for the lab and the nest report: V^{0,t}, or Y^t(0) when 0 does not recur.
struct NestData {
  std::optional<V00Choice> v00;
  Nest nest;
  std::string mode;  // "principal", "critical-pieces" or "none"
  std::vector<Address> pieces;
  std::string note;
};

NestData nest_data(const Puzzle& puzzle, const RunConfig& config) {
  NestData d;
  if (puzzle.jordan_mode()) {
    d.mode = "none";
    d.note = "no dividing fixed point";
    return d;
  }
  try {
    d.v00 = choose_V00(puzzle, config.horizon);
    d.nest = principal_nest(puzzle, d.v00->address, config.t_max, config.horizon);
    d.mode = "principal";
    for (const auto& lv : d.nest.levels) d.pieces.push_back(lv.piece);
    if (d.nest.stop) d.note = std::string(to_string(*d.nest.stop));
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kNonRecurrent && e.kind() != ErrorKind::kAddressUnderflow) throw;
    d.mode = "critical-pieces";
    d.note = std::string(to_string(e.kind()));
    for (int t = 0; t <= std::min(config.max_depth, puzzle.depth_limit()); ++t) d.pieces.push_back(*puzzle.critical_address(t));
  }
  return d;
}

std::vector<bool> central_flags(const Nest& nest) {
  std::vector<bool> flags;
  for (const auto& lv : nest.levels) flags.push_back(lv.central);
  return flags;
}

json cascade_json(const CascadeSummary& s) {
  return json{{"first_central", s.first_value},
              {"runs", s.runs},
              {"cascade_lengths", s.cascade_lengths},
              {"renormalizable", s.renormalizable}};
}

}  // namespace

RunConfig config_from_json(const json& j, RunConfig base) {
  if (!j.is_object()) config_error("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) config_error("unknown config key " + key);
  }
  RunConfig c = std::move(base);
  read(j, "l", c.degree);
  if (j.contains("c")) {
    const auto& v = j.at("c");
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
      c.c = Cx(v[0].get<double>(), v[1].get<double>());
    } else if (v.is_object() && v.contains("re")) {
      c.c = Cx(v.at("re").get<double>(), v.value("im", 0.0));
    } else if (v.is_number()) {
      c.c = Cx(v.get<double>(), 0.0);
    } else {
      config_error("c must be [re, im], {\"re\", \"im\"} or a number");
    }
    c.has_c = true;
  }
  read(j, "G0", c.g0);
  read(j, "max_depth", c.max_depth);
  read(j, "partition_depth", c.partition_depth);
  read(j, "horizon", c.horizon);
  read(j, "T_max", c.t_max);
  read(j, "N_cascade", c.n_cascade);
  read(j, "delta_tol", c.delta_tol);
  read(j, "grid_n", c.grid_n);
  read(j, "seed", c.seed);
  read(j, "output_dir", c.output_dir);
  read(j, "rays", c.rays);
  read(j, "stars", c.stars);
  read(j, "koebe_branches", c.koebe_branches);
  read(j, "transport_triples", c.transport_triples);
  read(j, "figures", c.figures);
  return c;
}

json to_json(const RunConfig& c) {
  json j{{"l", c.degree},
         {"c", cx_json(c.c)},
         {"G0", c.g0},
         {"max_depth", c.max_depth},
         {"partition_depth", c.partition_depth},
         {"horizon", c.horizon},
         {"T_max", c.t_max},
         {"N_cascade", c.n_cascade},
         {"delta_tol", c.delta_tol},
         {"grid_n", c.grid_n},
         {"seed", c.seed},
         {"koebe_branches", c.koebe_branches},
         {"transport_triples", c.transport_triples},
         {"figures", c.figures}};
  if (!c.rays.empty()) j["rays"] = c.rays;
  if (!c.stars.empty()) j["stars"] = c.stars;
  return j;
}

void validate(const RunConfig& c) {
  if (!c.has_c) config_error("c is required");
  if (c.degree < 2 || c.degree % 2 != 0) config_error("l must be even and >= 2, got " + std::to_string(c.degree));
  if (!std::isfinite(c.c.real()) || !std::isfinite(c.c.imag())) config_error("c must be finite");
  if (!(c.g0 > 0.0) || !std::isfinite(c.g0)) config_error("G0 must be positive");
  if (c.max_depth < 1 || c.partition_depth < 1 || c.horizon < 1 || c.t_max < 1 || c.n_cascade < 1) {
    config_error("depths and budgets must be positive");
  }
  if (!(c.delta_tol > 0.0)) config_error("delta_tol must be positive");
  if (c.grid_n < 16) config_error("grid_n must be at least 16");
  if (c.koebe_branches < 1 || c.transport_triples < 1) config_error("experiment budgets must be positive");
  if (c.output_dir.empty()) config_error("output_dir must not be empty");
  for (const auto& r : c.rays) parse_angle(r);
  for (const auto& star : c.stars) {
    if (star.empty()) config_error("a star needs at least one angle");
    for (const auto& r : star) parse_angle(r);
  }
}

std::string config_hash(const RunConfig& config) {
  const std::string canon = to_json(config).dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Angle parse_angle(const std::string& text) {
  const auto slash = text.find('/');
  try {
    if (slash == std::string::npos) throw std::invalid_argument(text);
    std::size_t used = 0;
    const long long p = std::stoll(text.substr(0, slash), &used);
    if (used != slash) throw std::invalid_argument(text);
    const long long q = std::stoll(text.substr(slash + 1), &used);
    if (used != text.size() - slash - 1 || q <= 0 || p < 0) throw std::invalid_argument(text);
    return Angle::make(p, q);
  } catch (const std::logic_error&) {
    config_error("angle must look like p/q, got '" + text + "'");
  }
}

json cmd_classify(const RunConfig& config) {
  prepare(config);
  Report r("classify", config);
  const auto field = make_field(config);
  json points = json::array();
  const json per = stage("classify", [&] { return periodic_summary(field.map, points); });

  bool likely_renormalizable = false;
  json nest_info;
  if (per["attracting_period"].get<int>() >= 2) {
    likely_renormalizable = true;
    nest_info["evidence"] = "attracting cycle of period >= 2";
  } else {
    try {
      const auto puzzle = make_puzzle(field, config);
      const auto nd = stage("nest", [&] { return nest_data(puzzle, config); });
      nest_info["mode"] = nd.mode;
      if (!nd.note.empty()) nest_info["note"] = nd.note;
      if (nd.mode == "principal") {
        const auto s = detect_cascades(central_flags(nd.nest), config.n_cascade);
        nest_info["cascades"] = cascade_json(s);
        likely_renormalizable = s.renormalizable;
      }
    } catch (const Error& e) {
      // an attracting or indifferent interior has no puzzle; classification still stands
      nest_info["mode"] = "none";
      nest_info["note"] = e.what();
    }
  }

  std::ostringstream csv;
  csv << "period,re,im,multiplier_re,multiplier_im,class\n";
  for (const auto& p : points) {
    csv << p["period"].get<int>() << ',' << fmt(p["location"][0]) << ',' << fmt(p["location"][1]) << ','
        << fmt(p["multiplier"][0]) << ',' << fmt(p["multiplier"][1]) << ',' << p["class"].get<std::string>() << '\n';
  }
  r.text("classify_points.csv", csv.str());

  json flags = json::array();
  if (per["repelling_only"].get<bool>()) flags.push_back("repelling-only");
  if (per["parabolic"].get<bool>()) flags.push_back("parabolic-detected");
  if (likely_renormalizable) flags.push_back("likely-renormalizable");
  if (field.map.has_real_coefficients()) flags.push_back("real-unimodal");
  r.body["classification"] = {{"flags", flags},
                              {"repelling_only", per["repelling_only"]},
                              {"parabolic_detected", per["parabolic"]},
                              {"likely_renormalizable", likely_renormalizable},
                              {"real_unimodal", field.map.has_real_coefficients()},
                              {"periods_scanned", per["periods_scanned"]},
                              {"attracting_period", per["attracting_period"]},
                              {"points", points},
                              {"nest", nest_info}};
  return r.finish("classify");
}

json cmd_ray(const RunConfig& config) {
  prepare(config);
  Report r("ray", config);
  const auto field = make_field(config);
  std::vector<Angle> angles;
  std::optional<Cx> alpha;
  if (config.rays.empty()) {
    const auto ar = stage("rays", [&] { return rays_at_alpha(field); });
    angles = ar.angles;
    alpha = ar.alpha;
  } else {
    for (const auto& s : config.rays) angles.push_back(parse_angle(s));
    try {
      alpha = rays_at_alpha(field).alpha;
    } catch (const Error&) {
    }
  }
  std::vector<ExternalRay> rays;
  json out = json::array();
  for (const auto& a : angles) {
    auto trace = stage("rays", [&] { return trace_ray(field, a, 4.0 * config.g0, 1e-9 * config.g0); });
    json e{{"angle", to_string(a)}, {"points", trace.ray.points.size()}};
    if (trace.error) e["error"] = std::string(to_string(*trace.error));
    try {
      const Cx z = land_ray(trace.ray, 1e-4);
      trace.ray.landing = z;
      e["landing"] = cx_json(z);
      if (alpha) e["distance_to_alpha"] = std::abs(z - *alpha);
    } catch (const Error& err) {
      e["landing_error"] = std::string(to_string(err.kind()));
    }
    out.push_back(std::move(e));
    rays.push_back(std::move(trace.ray));
  }
  if (alpha) r.body["alpha"] = cx_json(*alpha);
  r.body["rays"] = out;

  std::ostringstream csv;
  write_rays_csv(csv, rays);
  r.text("rays.csv", csv.str());
  if (config.figures) {
    const View view = view_for(field);
    Image img(view.width, view.height);
    render_julia(img, view, field.map);
    for (std::size_t i = 0; i < rays.size(); ++i) {
      std::vector<Cx> pts;
      for (const auto& p : rays[i].points) pts.push_back(p.z);
      draw_polyline(img, view, pts, palette(i));
    }
    r.png("rays.png", img);
  }
  return r.finish("ray");
}

json cmd_puzzle(const RunConfig& config) {
  prepare(config);
  Report r("puzzle", config);
  const auto field = make_field(config);
  auto puzzle = make_puzzle(field, config);
  const int depth = std::min(config.max_depth, puzzle.depth_limit());
  stage("puzzle", [&] {
    puzzle.refine(depth);
    return 0;
  });
  const int shown = std::min(depth, 3);
  json pieces = json::array();
  std::ostringstream csv;
  csv << "depth,id,address,critical,gaps,diameter\n";
  std::vector<std::vector<Cx>> polys;
  stage("geometry", [&] {
    for (int d = 0; d <= depth; ++d) {
      for (const auto& p : puzzle.level(d)) {
        const auto den = puzzle.denominator(d);
        json angles = json::array();
        for (const auto& g : p.gaps) {
          angles.push_back({to_string(Angle::make(g.start, den)), to_string(Angle::make(g.start + g.length, den))});
        }
        double diam = -1.0;
        if (d <= shown || p.critical) {
          auto poly = puzzle.polygon(p.address);
          diam = polygon_diameter(poly);
          if (d == shown) polys.push_back(std::move(poly));
        }
        json e{{"depth", d},
               {"address", address_json(p.address)},
               {"angles", angles},
               {"potential", puzzle.potential_at(d)},
               {"critical", p.critical}};
        e["diameter"] = diam >= 0.0 ? json(diam) : json(nullptr);
        pieces.push_back(std::move(e));
        csv << d << ',' << p.id << ',' << to_string(p.address) << ',' << (p.critical ? 1 : 0) << ',' << p.gaps.size()
            << ',' << (diam >= 0.0 ? fmt(diam) : std::string()) << '\n';
      }
    }
    return 0;
  });
  r.body["puzzle"] = {{"jordan_mode", puzzle.jordan_mode()},
                      {"depth", depth},
                      {"depth0_angles", [&] {
                         json a = json::array();
                         for (const auto& t : puzzle.depth0_angles()) a.push_back(to_string(t));
                         return a;
                       }()}};
  if (puzzle.dividing_point()) r.body["puzzle"]["alpha"] = cx_json(*puzzle.dividing_point());
  if (const auto tc = puzzle.critical_value_angle()) {
    r.body["puzzle"]["critical_value_angle"] =
        tc->is_exact() ? json(to_string(tc->exact_value())) : json(static_cast<double>(tc->approx()));
  }
  r.body["pieces"] = pieces;

  if (!puzzle.jordan_mode()) {
    const auto cn = stage("geometry", [&] { return critical_nest(puzzle, depth); });
    json nest = json::array();
    bool decreasing = true;
    for (std::size_t i = 0; i < cn.size(); ++i) {
      nest.push_back({{"depth", cn[i].depth}, {"diameter", cn[i].diameter}});
      if (i > 0 && !(cn[i].diameter < cn[i - 1].diameter)) decreasing = false;
    }
    r.body["critical_nest"] = nest;
    r.check("critical-nest-diameters-decrease", decreasing, false);
  }
  r.text("pieces.csv", csv.str());
  if (config.figures) {
    const View view = view_for(field);
    Image img(view.width, view.height);
    render_julia(img, view, field.map);
    for (std::size_t i = 0; i < polys.size(); ++i) fill_polygon(img, view, polys[i], palette(i));
    r.png("puzzle.png", img);
  }
  return r.finish("puzzle");
}

json cmd_nest(const RunConfig& config) {
  prepare(config);
  Report r("nest", config);
  const auto field = make_field(config);
  const auto puzzle = make_puzzle(field, config);
  const auto nd = stage("nest", [&] { return nest_data(puzzle, config); });
  r.body["nest_mode"] = nd.mode;
  if (!nd.note.empty()) r.body["nest_note"] = nd.note;
  if (nd.v00) {
    r.body["V00"] = {{"address", address_json(nd.v00->address)},
                     {"return_time", nd.v00->return_time},
                     {"gap", nd.v00->gap},
                     {"diameter", nd.v00->diameter}};
  }
  json table = json::array();
  std::ostringstream csv;
  csv << "t,depth,return_time,central,diameter,modulus,modulus_lower,modulus_upper\n";
  const std::size_t levels = std::min<std::size_t>(nd.pieces.size(), static_cast<std::size_t>(config.t_max));
  double min_mod = std::numeric_limits<double>::infinity();
  bool nondecreasing = true;
  for (std::size_t t = 0; t < levels; ++t) {
    const auto& v = nd.pieces[t];
    json row{{"t", t}, {"depth", v.size() - 1}, {"address", address_json(v)}};
    const auto poly = stage("geometry", [&] { return puzzle.polygon(v); });
    const double diam = polygon_diameter(poly);
    row["diam"] = diam;
    if (nd.mode == "principal") {
      row["return_time"] = nd.nest.levels[t].return_time;
      row["central"] = nd.nest.levels[t].central;
      if (t > 0 && nd.nest.levels[t].return_time < nd.nest.levels[t - 1].return_time) nondecreasing = false;
    }
    // annulus to the next compactly contained level
    std::optional<ModulusEstimate> mod;
    std::size_t inner = t + 1;
    while (inner < nd.pieces.size() && !compactly_contained(puzzle, nd.pieces[inner], v)) ++inner;
    if (inner < nd.pieces.size()) {
      try {
        mod = stage("modulus", [&] { return annulus_modulus(poly, puzzle.polygon(nd.pieces[inner]), config.grid_n); });
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kDegenerateAnnulus) throw;
        row["modulus_error"] = std::string(to_string(e.kind()));
      }
    }
    if (mod) {
      row["modulus"] = {{"inner_t", inner}, {"lower", mod->lower}, {"estimate", mod->estimate}, {"upper", mod->upper},
                        {"method", mod->method}, {"grid_n", mod->grid_n}};
      min_mod = std::min(min_mod, mod->estimate);
    }
    csv << t << ',' << v.size() - 1 << ',' << (row.contains("return_time") ? std::to_string(row["return_time"].get<int>()) : "")
        << ',' << (row.contains("central") ? (row["central"].get<bool>() ? "1" : "0") : "") << ',' << fmt(diam) << ','
        << (mod ? fmt(mod->estimate) : "") << ',' << (mod ? fmt(mod->lower) : "") << ',' << (mod ? fmt(mod->upper) : "")
        << '\n';
    table.push_back(std::move(row));
  }
  r.body["nest"] = table;
  if (std::isfinite(min_mod)) r.body["min_modulus"] = min_mod;
  r.check("moduli-positive", std::isfinite(min_mod) && min_mod > 0.0, false, std::isfinite(min_mod) ? json(min_mod) : json(nullptr));

  CascadeSummary cascades;
  if (nd.mode == "principal") {
    cascades = detect_cascades(central_flags(nd.nest), config.n_cascade);
    r.check("return-times-nondecreasing", nondecreasing, true);
    r.check("cascade-encoding-roundtrip", decode_cascades(cascades) == central_flags(nd.nest), true);
  }
  r.body["cascades"] = cascade_json(cascades);
  r.body["renormalizable_flag"] = cascades.renormalizable;

  if (!nd.pieces.empty()) {
    const Address& v = nd.pieces[std::min<std::size_t>(2, nd.pieces.size() - 1)];
    const auto result = stage("return-system", [&] {
      const auto samples = random_angles_in(puzzle, v, 2000, config.seed);
      const auto sys = build_return_system(puzzle, v, samples, config.horizon);
      return std::make_pair(sys, unbranched_check(puzzle, sys, config.horizon));
    });
    json u{{"range", address_json(v)},
           {"domains", result.first.domains.size()},
           {"coverage", result.first.coverage()},
           {"unbranched", result.second.unbranched}};
    if (result.second.witness) u["witness"] = *result.second.witness;
    r.body["unbranched"] = u;
    std::size_t pair_overlap = 0;
    const auto& doms = result.first.domains;
    for (std::size_t i = 0; i < doms.size(); ++i) {
      for (std::size_t j = i + 1; j < doms.size(); ++j) {
        const auto& a = doms[i].piece.size() <= doms[j].piece.size() ? doms[i].piece : doms[j].piece;
        const auto& b = doms[i].piece.size() <= doms[j].piece.size() ? doms[j].piece : doms[i].piece;
        if (std::equal(a.begin(), a.end(), b.begin())) ++pair_overlap;
      }
    }
    r.check("return-domains-disjoint", pair_overlap == 0, true, pair_overlap);
  }
  r.text("nest.csv", csv.str());
  return r.finish("nest");
}

json cmd_measure(const RunConfig& config) {
  prepare(config);
  Report r("measure", config);
  const auto field = make_field(config);
  auto puzzle = make_puzzle(field, config);
  const auto partition = stage("partition", [&] { return build_partition(puzzle, config.partition_depth); });
  const auto est = stage("delta", [&] { return estimate_conformal(partition, config.delta_tol, config.seed); });
  r.body["summary"] = {{"c", cx_json(config.c)},
                       {"l", config.degree},
                       {"depth", partition.depth},
                       {"delta", est.delta},
                       {"eigenvalue", est.eigenvalue},
                       {"pressure_residual", est.pressure_residual},
                       {"conformality_residual", est.conformality_residual},
                       {"relative_conformality_residual", est.relative_conformality_residual},
                       {"atoms", partition.size()},
                       {"dropped_atoms", partition.dropped_atoms},
                       {"dropped_branches", partition.dropped_branches},
                       {"jordan_mode", puzzle.jordan_mode()}};
  double mass = 0.0;
  bool positive = true;
  for (double w : est.weights) {
    mass += w;
    positive = positive && w > 0.0;
  }
  r.check("measure-normalized", std::abs(mass - 1.0) <= 1e-9, true, mass);
  r.check("measure-positive", positive, true);

  std::ostringstream csv;
  write_partition_csv(csv, partition, est);
  r.text("atoms.csv", csv.str());
  if (config.figures) {
    const View view = view_for(field);
    Image img(view.width, view.height);
    render_julia(img, view, field.map);
    const double mean = 1.0 / static_cast<double>(partition.size());
    for (std::size_t a = 0; a < partition.size(); ++a) {
      const double s = std::clamp(0.5 + std::log10(est.weights[a] / mean) / 4.0, 0.0, 1.0);
      const Rgb c{static_cast<std::uint8_t>(255 * s), 40, static_cast<std::uint8_t>(255 * (1 - s))};
      int x, y;
      if (!view.pixel(partition.atoms[a].sample, x, y)) continue;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) img.set(x + dx, y + dy, c);
      }
    }
    r.png("measure.png", img);
  }
  return r.finish("measure");
}

json cmd_verify(const RunConfig& config) {
  prepare(config);
  Report r("verify", config);
  const auto field = make_field(config);
  auto puzzle = make_puzzle(field, config);
  const auto partition = stage("partition", [&] { return build_partition(puzzle, config.partition_depth); });
  const auto est = stage("delta", [&] { return estimate_conformal(partition, config.delta_tol, config.seed); });
  const auto& w = est.weights;
  json exp;
  exp["delta"] = est.delta;
  exp["atoms"] = partition.size();
  std::vector<double> curve;

  // uniqueness across random starts
  stage("uniqueness", [&] {
    double worst = 0.0;
    for (std::uint64_t s = 1; s <= 5; ++s) {
      worst = std::max(worst, total_variation(eigenmeasure(partition, est.delta, config.seed + s), w));
    }
    exp["uniqueness_tv"] = worst;
    r.check("uniqueness-tv", worst <= 1e-6, true, worst);
    return 0;
  });

  if (!puzzle.jordan_mode()) {
    const int target_depth = std::min(2, partition.depth);
    const Address target = *puzzle.critical_address(target_depth);
    const auto branches = stage("koebe", [&] {
      return sample_entry_branches(puzzle, target, static_cast<std::size_t>(config.koebe_branches), config.seed);
    });
    stage("koebe", [&] {
      int certified = 0, failures = 0;
      double worst = 1.0;
      for (std::size_t i = 0; i < branches.size(); ++i) {
        if (!branches[i].univalent) continue;
        const auto rep = koebe_check(puzzle, branches[i], 0.5, static_cast<int>(i));
        ++certified;
        worst = std::max(worst, rep.measured);
        if (!rep.pass) ++failures;
      }
      exp["koebe"] = {{"branches", branches.size()}, {"certified", certified}, {"failures", failures},
                      {"worst_distortion", worst}, {"bound", koebe_bound(0.5)}};
      r.check("koebe-distortion", failures == 0 && certified > 0, true, exp["koebe"]);
      return 0;
    });
    stage("transport", [&] {
      const auto checks = transport_sweep(partition, w, est.delta, branches,
                                          static_cast<std::size_t>(config.transport_triples), config.seed);
      int failures = 0;
      double k_max = 1.0;
      for (const auto& t : checks) {
        if (!t.pass) ++failures;
        k_max = std::max(k_max, t.k_measured);
      }
      exp["transport"] = {{"triples", checks.size()}, {"failures", failures}, {"k_max", k_max}};
      r.check("density-transport", failures == 0 && !checks.empty(), true, exp["transport"]);
      return 0;
    });
    stage("avoidance", [&] {
      const int ud = std::min(6, partition.depth);
      const auto u = atoms_in(partition, *puzzle.critical_address(ud));
      curve = avoidance_curve(partition, w, u, 200, 16, config.seed);
      exp["avoidance"] = {{"U", "critical atoms of depth " + std::to_string(ud)}, {"U_mass", u.mass(w)},
                          {"n", 200}, {"final", curve.back()}};
      return 0;
    });
    stage("density", [&] {
      const auto nest = lab_nest(puzzle, std::min(8, partition.depth));
      const AtomSet x = atoms_in(partition, Address{0});
      const auto probe = invariant_probe(partition, w, x, nest, 50);
      const auto cover = cover_convergence(partition, w, AtomSet(partition.size(), true), nest, config.seed);
      std::vector<double> weak;
      for (const auto& s : weak_density_search(partition, w, x, 0, partition.depth)) weak.push_back(s.density);
      exp["invariant_probe"] = probe;
      exp["cover_convergence"] = cover;
      exp["weak_density"] = weak;
      // dens(Y|V) + dens(V \ Y|V) = 1 on every nest level
      double worst = 0.0;
      for (const auto& v : nest) {
        const auto vv = atoms_in(partition, v);
        if (vv.mass(w) <= 0.0) continue;
        worst = std::max(worst, std::abs(density(x, vv, w) + density(x.complement(), vv, w) - 1.0));
      }
      r.check("density-additivity", worst <= 1e-12, true, worst);
      if (config.figures) r.png("density.png", plot_series({probe, cover, weak}, 0.0, 1.0));
      return 0;
    });
  } else {
    stage("avoidance", [&] {
      curve = parabolic_avoidance(partition, w, 0.2, 500, 16, config.seed);
      exp["avoidance"] = {{"U", "radius 0.2 about the parabolic point"}, {"n", 500}, {"final", curve.back()}};
      return 0;
    });
  }
  if (!curve.empty()) {
    bool monotone = true;
    for (std::size_t t = 1; t < curve.size(); ++t) monotone = monotone && curve[t] <= curve[t - 1];
    r.check("avoidance-nonincreasing", monotone, true);
    r.check("avoidance-decay", curve.back() <= 0.05, false, curve.back());
    std::ostringstream csv;
    csv << "n,mass\n";
    for (std::size_t t = 0; t < curve.size(); ++t) csv << t << ',' << fmt(curve[t]) << '\n';
    r.text("avoidance.csv", csv.str());
  }
  r.body["experiments"] = exp;
  return r.finish("verify");
}

bool hard_checks_pass(const json& report) {
  if (!report.contains("checks")) return true;
  for (const auto& c : report["checks"]) {
    if (c.value("hard", false) && !c.value("pass", false)) return false;
  }
  return true;
}

}  // namespace puzzlemeasure
