#include "sfcca/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace sfcca::io {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  throw ValidationError("line " + std::to_string(line) + ": " + msg);
}

double parse_number(const std::string& s, std::size_t line) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) fail(line, "cannot parse number '" + s + "'");
  if (!std::isfinite(v)) fail(line, "non-finite value");
  return v;
}

struct Lines {
  std::vector<std::string> text;
  std::vector<std::size_t> number;
};

// Non-blank lines with their 1-based line numbers.
Lines read_lines(const std::string& text) {
  Lines out;
  std::istringstream is(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (trim(line).empty()) continue;
    out.text.push_back(line);
    out.number.push_back(n);
  }
  if (out.text.empty()) fail(1, "file is empty");
  return out;
}

Eigen::Index dim_from_frame_size(std::size_t count, std::size_t line) {
  for (Eigen::Index m = 1; m <= 64; ++m) {
    if (static_cast<std::size_t>(m * (m + 1) / 2) == count) return m;
  }
  fail(line, "number of value columns " + std::to_string(count) + " is not m(m+1)/2");
}

json tensor(const std::vector<std::size_t>& shape, std::vector<double> data) {
  return json{{"shape", shape}, {"data", std::move(data)}};
}

json matrices_json(const std::vector<const Matrix*>& mats, std::vector<std::size_t> outer) {
  std::vector<double> data;
  Eigen::Index r = 0, c = 0;
  if (!mats.empty()) {
    r = mats.front()->rows();
    c = mats.front()->cols();
  }
  for (const Matrix* a : mats) {
    for (Eigen::Index i = 0; i < a->rows(); ++i) {
      for (Eigen::Index j = 0; j < a->cols(); ++j) data.push_back((*a)(i, j));
    }
  }
  outer.push_back(static_cast<std::size_t>(r));
  outer.push_back(static_cast<std::size_t>(c));
  return tensor(outer, std::move(data));
}

std::vector<std::size_t> shape_of(const json& j) {
  if (!j.is_object() || !j.contains("shape") || !j.contains("data")) {
    throw ValidationError("array entry must have 'shape' and 'data'");
  }
  return j.at("shape").get<std::vector<std::size_t>>();
}

// Reads a tensor whose last two axes are matrices; returns them in order.
std::vector<Matrix> matrices_from_json(const json& j, std::size_t outer_rank) {
  const auto shape = shape_of(j);
  if (shape.size() != outer_rank + 2) throw ValidationError("array has unexpected rank");
  const auto data = j.at("data").get<std::vector<double>>();
  std::size_t count = 1;
  for (std::size_t i = 0; i < outer_rank; ++i) count *= shape[i];
  const std::size_t r = shape[outer_rank], c = shape[outer_rank + 1];
  if (data.size() != count * r * c) throw ValidationError("array data does not match its shape");
  std::vector<Matrix> out;
  std::size_t pos = 0;
  for (std::size_t k = 0; k < count; ++k) {
    Matrix a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t jj = 0; jj < c; ++jj) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(jj)) = data[pos++];
    }
    out.push_back(std::move(a));
  }
  return out;
}

json vector_json(const Vector& v) {
  return tensor({static_cast<std::size_t>(v.size())}, std::vector<double>(v.data(), v.data() + v.size()));
}

Vector vector_from_json(const json& j) {
  const auto shape = shape_of(j);
  const auto data = j.at("data").get<std::vector<double>>();
  if (shape.size() != 1 || data.size() != shape[0]) throw ValidationError("vector data does not match its shape");
  return Eigen::Map<const Vector>(data.data(), static_cast<Eigen::Index>(data.size()));
}

json spd_curve_json(const SPDCurve& c) {
  std::vector<const Matrix*> mats;
  for (const auto& v : c.values()) mats.push_back(&v.matrix());
  return matrices_json(mats, {c.size()});
}

json sym_list_json(const std::vector<SymMatrix>& vals) {
  std::vector<const Matrix*> mats;
  for (const auto& v : vals) mats.push_back(&v.matrix());
  return matrices_json(mats, {vals.size()});
}

template <class Field>
json field_list_json(const std::vector<Field>& fields, std::size_t len, Eigen::Index m) {
  std::vector<const Matrix*> mats;
  for (const auto& f : fields) {
    for (const auto& v : f.values()) mats.push_back(&v.matrix());
  }
  std::vector<std::size_t> shape{fields.size(), len, static_cast<std::size_t>(m), static_cast<std::size_t>(m)};
  std::vector<double> data;
  for (const Matrix* a : mats) {
    for (Eigen::Index i = 0; i < a->rows(); ++i) {
      for (Eigen::Index j = 0; j < a->cols(); ++j) data.push_back((*a)(i, j));
    }
  }
  return tensor(shape, std::move(data));
}

json sym_curve_list_json(const std::vector<SymCurve>& curves, std::size_t len, Eigen::Index m) {
  std::vector<double> data;
  for (const auto& c : curves) {
    for (const auto& v : c.values) {
      for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) data.push_back(v.matrix()(i, j));
      }
    }
  }
  return tensor({curves.size(), len, static_cast<std::size_t>(m), static_cast<std::size_t>(m)}, std::move(data));
}

json matrix_list_json(const std::vector<Matrix>& mats) {
  std::vector<const Matrix*> ptrs;
  for (const auto& a : mats) ptrs.push_back(&a);
  return matrices_json(ptrs, {mats.size()});
}

std::vector<std::vector<Matrix>> fields_from_json(const json& j) {
  const auto shape = shape_of(j);
  if (shape.size() != 4) throw ValidationError("field list must have rank 4");
  auto flat = matrices_from_json(j, 2);
  std::vector<std::vector<Matrix>> out(shape[0]);
  std::size_t pos = 0;
  for (std::size_t k = 0; k < shape[0]; ++k) {
    for (std::size_t l = 0; l < shape[1]; ++l) out[k].push_back(std::move(flat[pos++]));
  }
  return out;
}

json cca_json(const CCAModel& cca) {
  return json{{"T", matrix_to_json(cca.T)},
              {"H", matrix_to_json(cca.H)},
              {"B", matrix_to_json(cca.B)},
              {"correlations", vector_json(cca.correlations)},
              {"ties_flagged", cca.ties_flagged}};
}

CCAModel cca_from_json(const json& j) {
  CCAModel cca;
  cca.T = matrix_from_json(j.at("T"));
  cca.H = matrix_from_json(j.at("H"));
  cca.B = matrix_from_json(j.at("B"));
  cca.correlations = vector_from_json(j.at("correlations"));
  cca.ties_flagged = j.at("ties_flagged").get<bool>();
  if (cca.T.cols() != cca.correlations.size() || cca.H.cols() != cca.correlations.size()) {
    throw ValidationError("canonical vector counts do not match the correlations");
  }
  return cca;
}

json header(const std::string& kind, const ModelMetadata& meta) {
  json j;
  j["format"] = "sfcca-model";
  j["version"] = std::to_string(kModelMajorVersion) + "." + std::to_string(kModelMinorVersion);
  j["kind"] = kind;
  j["metadata"] = {{"seed", meta.seed}, {"config", meta.config}, {"config_hash", config_hash(meta.config)}};
  return j;
}

json transform_json(const XTransform& t) {
  return json{{"center", vector_json(t.center)}, {"scale", vector_json(t.scale)}};
}

XTransform transform_from_json(const json& j) {
  XTransform t{vector_from_json(j.at("center")), vector_from_json(j.at("scale"))};
  if (t.center.size() != t.scale.size()) throw ValidationError("x transform sizes differ");
  return t;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CurveTable parse_curves(const std::string& text) {
  const Lines lines = read_lines(text);
  const auto head = split(lines.text[0]);
  if (head.size() < 3 || head[0] != "subject" || head[1] != "t") {
    fail(lines.number[0], "curve header must start with 'subject,t'");
  }
  const std::size_t width = head.size() - 2;
  const Eigen::Index m = dim_from_frame_size(width, lines.number[0]);
  {
    std::size_t k = 2;
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = i; j < m; ++j, ++k) {
        const std::string want = "c" + std::to_string(i + 1) + std::to_string(j + 1);
        if (head[k] != want) fail(lines.number[0], "expected column '" + want + "', found '" + head[k] + "'");
      }
    }
  }
  if (lines.text.size() < 2) fail(lines.number[0] + 1, "no data rows");

  CurveTable out;
  std::set<std::string> seen;
  std::vector<double> times;
  std::vector<SPDMatrix> values;
  std::vector<double> ref_times;
  std::string current;

  auto flush = [&](std::size_t line) {
    if (current.empty()) return;
    if (ref_times.empty()) {
      ref_times = times;
    } else if (times != ref_times) {
      fail(line, "subject '" + current + "' is observed on a different time grid");
    }
    try {
      out.curves.emplace_back(TimeGrid(times), std::move(values));
    } catch (const ValidationError& e) {
      fail(line, "subject '" + current + "': " + e.what());
    }
    out.ids.push_back(current);
    times.clear();
    values.clear();
  };

  for (std::size_t r = 1; r < lines.text.size(); ++r) {
    const std::size_t ln = lines.number[r];
    const auto cells = split(lines.text[r]);
    if (cells.size() != head.size()) {
      fail(ln, "expected " + std::to_string(head.size()) + " columns, found " + std::to_string(cells.size()));
    }
    const std::string& id = cells[0];
    if (id.empty()) fail(ln, "empty subject id");
    if (id != current) {
      flush(ln);
      if (!seen.insert(id).second) fail(ln, "duplicate subject id '" + id + "'");
      current = id;
    }
    const double t = parse_number(cells[1], ln);
    if (!times.empty() && !(t > times.back())) fail(ln, "time points of subject '" + id + "' must increase");
    Matrix a(m, m);
    std::size_t k = 2;
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = i; j < m; ++j) a(i, j) = a(j, i) = parse_number(cells[k++], ln);
    }
    try {
      values.emplace_back(std::move(a));
    } catch (const ValidationError& e) {
      fail(ln, "subject '" + id + "', time index " + std::to_string(times.size()) + ": " + e.what());
    }
    times.push_back(t);
  }
  flush(lines.number.back());
  return out;
}

CovariateTable parse_covariates(const std::string& text) {
  const Lines lines = read_lines(text);
  const auto head = split(lines.text[0]);
  if (head.size() < 2 || head[0] != "subject") fail(lines.number[0], "covariate header must start with 'subject'");
  const std::size_t p = head.size() - 1;
  if (lines.text.size() < 2) fail(lines.number[0] + 1, "no data rows");
  CovariateTable out;
  out.x.resize(static_cast<Eigen::Index>(lines.text.size() - 1), static_cast<Eigen::Index>(p));
  std::set<std::string> seen;
  for (std::size_t r = 1; r < lines.text.size(); ++r) {
    const std::size_t ln = lines.number[r];
    const auto cells = split(lines.text[r]);
    if (cells.size() != head.size()) {
      fail(ln, "expected " + std::to_string(head.size()) + " columns, found " + std::to_string(cells.size()));
    }
    if (cells[0].empty()) fail(ln, "empty subject id");
    if (!seen.insert(cells[0]).second) fail(ln, "duplicate subject id '" + cells[0] + "'");
    out.ids.push_back(cells[0]);
    for (std::size_t j = 0; j < p; ++j) {
      out.x(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(j)) = parse_number(cells[j + 1], ln);
    }
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ValidationError("failed writing '" + path.string() + "'");
}

CurveTable load_curves(const std::filesystem::path& path) {
  try {
    return parse_curves(read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

CovariateTable load_covariates(const std::filesystem::path& path) {
  try {
    return parse_covariates(read_file(path));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

Dataset load_dataset(const std::filesystem::path& curves, const std::filesystem::path& covariates) {
  CurveTable ct = load_curves(curves);
  const CovariateTable xt = load_covariates(covariates);
  if (ct.ids.size() != xt.ids.size()) {
    throw ValidationError("curve file has " + std::to_string(ct.ids.size()) + " subjects but covariate file has " +
                          std::to_string(xt.ids.size()));
  }
  std::map<std::string, Eigen::Index> row;
  for (std::size_t i = 0; i < xt.ids.size(); ++i) row[xt.ids[i]] = static_cast<Eigen::Index>(i);
  Dataset ds;
  ds.x.resize(xt.x.rows(), xt.x.cols());
  for (std::size_t i = 0; i < ct.ids.size(); ++i) {
    const auto it = row.find(ct.ids[i]);
    if (it == row.end()) throw ValidationError("subject '" + ct.ids[i] + "' has no covariates");
    ds.x.row(static_cast<Eigen::Index>(i)) = xt.x.row(it->second);
  }
  ds.ids = std::move(ct.ids);
  ds.curves = std::move(ct.curves);
  return ds;
}

std::string curves_csv(const std::vector<std::string>& ids, std::span<const SPDCurve> curves) {
  if (ids.size() != curves.size()) throw ValidationError("one id per curve required");
  std::ostringstream os;
  const Eigen::Index m = curves.empty() ? 0 : curves.front().dim();
  os << "subject,t";
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) os << ",c" << i + 1 << j + 1;
  }
  os << "\n";
  for (std::size_t s = 0; s < curves.size(); ++s) {
    const auto& c = curves[s];
    for (std::size_t l = 0; l < c.size(); ++l) {
      os << ids[s] << "," << format_double(c.grid()[l]);
      const Matrix& a = c[l].matrix();
      for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = i; j < m; ++j) os << "," << format_double(a(i, j));
      }
      os << "\n";
    }
  }
  return os.str();
}

std::string covariates_csv(const std::vector<std::string>& ids, const Matrix& x) {
  if (static_cast<Eigen::Index>(ids.size()) != x.rows()) throw ValidationError("one id per row required");
  std::ostringstream os;
  os << "subject";
  for (Eigen::Index j = 0; j < x.cols(); ++j) os << ",x" << j + 1;
  os << "\n";
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    os << ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < x.cols(); ++j) os << "," << format_double(x(i, j));
    os << "\n";
  }
  return os.str();
}

json matrix_to_json(const Matrix& a) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(a.size()));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) data.push_back(a(i, j));
  }
  return tensor({static_cast<std::size_t>(a.rows()), static_cast<std::size_t>(a.cols())}, std::move(data));
}

Matrix matrix_from_json(const json& j) {
  auto mats = matrices_from_json(j, 0);
  return std::move(mats.front());
}

std::string config_hash(const json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json model_to_json(const FunctionalCCAModel& model, const ModelMetadata& meta) {
  json j = header("functional_cca", meta);
  const auto& mean = *model.basis.mean_curve;
  const auto len = mean.size();
  const auto m = mean.dim();
  j["grid"] = mean.grid().points();
  j["lambda"] = model.lambda;
  j["mean_curve"] = spd_curve_json(mean);
  j["components"] = field_list_json(model.basis.components, len, m);
  j["eigenvalues"] = vector_json(model.basis.eigenvalues);
  j["coefficient_functions"] = matrix_list_json(model.basis.coefficient_functions);
  j["coefficient_mean"] = matrix_to_json(model.basis.coefficient_mean);
  j["cca"] = cca_json(model.cca);
  j["canonical_functions"] = field_list_json(model.canonical_functions, len, m);
  j["x_transform"] = transform_json(model.x_transform);
  j["warnings"] = model.warnings;
  return j;
}

json model_to_json(const EuclideanCCAModel& model, const ModelMetadata& meta) {
  json j = header("euclidean_cca", meta);
  const auto len = model.grid.size();
  const Eigen::Index m = model.mean.empty() ? 0 : model.mean.front().dim();
  j["grid"] = model.grid.points();
  j["lambda"] = model.lambda;
  j["mean"] = sym_list_json(model.mean);
  j["components"] = sym_curve_list_json(model.components, len, m);
  j["eigenvalues"] = vector_json(model.eigenvalues);
  j["coefficient_functions"] = matrix_list_json(model.coefficient_functions);
  j["cca"] = cca_json(model.cca);
  j["canonical_functions"] = sym_curve_list_json(model.canonical_functions, len, m);
  j["x_transform"] = transform_json(model.x_transform);
  j["warnings"] = model.warnings;
  return j;
}

ModelArtifact model_from_json(const json& j) {
  try {
    if (!j.is_object() || j.value("format", "") != "sfcca-model") throw ValidationError("not an sfcca model file");
    const std::string version = j.at("version").get<std::string>();
    const auto dot = version.find('.');
    int major = -1;
    std::from_chars(version.data(), version.data() + (dot == std::string::npos ? version.size() : dot), major);
    if (major != kModelMajorVersion) {
      throw ValidationError("unsupported model version " + version + " (this build reads " +
                            std::to_string(kModelMajorVersion) + ".x)");
    }
    ModelArtifact art;
    art.kind = j.at("kind").get<std::string>();
    art.meta.seed = j.at("metadata").at("seed").get<std::uint64_t>();
    art.meta.config = j.at("metadata").at("config");
    const TimeGrid grid(j.at("grid").get<std::vector<double>>());

    auto sym_fields = [&](const json& arr) {
      std::vector<std::vector<SymMatrix>> out;
      for (auto& f : fields_from_json(arr)) {
        if (f.size() != grid.size()) throw ValidationError("field length does not match the grid");
        std::vector<SymMatrix> vals;
        for (auto& a : f) vals.emplace_back(std::move(a));
        out.push_back(std::move(vals));
      }
      return out;
    };

    if (art.kind == "functional_cca") {
      auto& model = art.functional;
      std::vector<SPDMatrix> mean_vals;
      for (auto& a : matrices_from_json(j.at("mean_curve"), 1)) mean_vals.emplace_back(std::move(a));
      model.basis.mean_curve = std::make_shared<const SPDCurve>(grid, std::move(mean_vals));
      for (auto& vals : sym_fields(j.at("components"))) model.basis.components.emplace_back(model.basis.mean_curve, std::move(vals));
      model.basis.eigenvalues = vector_from_json(j.at("eigenvalues"));
      model.basis.coefficient_functions = matrices_from_json(j.at("coefficient_functions"), 1);
      model.basis.coefficient_mean = matrix_from_json(j.at("coefficient_mean"));
      model.cca = cca_from_json(j.at("cca"));
      for (auto& vals : sym_fields(j.at("canonical_functions"))) model.canonical_functions.emplace_back(model.basis.mean_curve, std::move(vals));
      model.x_transform = transform_from_json(j.at("x_transform"));
      model.lambda = j.at("lambda").get<double>();
      model.warnings = j.at("warnings").get<std::vector<std::string>>();
      if (static_cast<int>(model.canonical_functions.size()) != model.cca.rank() ||
          model.basis.eigenvalues.size() != model.basis.rank() || model.cca.H.rows() != model.basis.rank()) {
        throw ValidationError("model parts have inconsistent sizes");
      }
    } else if (art.kind == "euclidean_cca") {
      auto& model = art.euclidean;
      model.grid = grid;
      for (auto& a : matrices_from_json(j.at("mean"), 1)) model.mean.emplace_back(std::move(a));
      for (auto& vals : sym_fields(j.at("components"))) model.components.push_back({grid, std::move(vals)});
      model.eigenvalues = vector_from_json(j.at("eigenvalues"));
      model.coefficient_functions = matrices_from_json(j.at("coefficient_functions"), 1);
      model.cca = cca_from_json(j.at("cca"));
      for (auto& vals : sym_fields(j.at("canonical_functions"))) model.canonical_functions.push_back({grid, std::move(vals)});
      model.x_transform = transform_from_json(j.at("x_transform"));
      model.lambda = j.at("lambda").get<double>();
      model.warnings = j.at("warnings").get<std::vector<std::string>>();
      if (static_cast<int>(model.canonical_functions.size()) != model.cca.rank()) {
        throw ValidationError("model parts have inconsistent sizes");
      }
    } else {
      throw ValidationError("unknown model kind '" + art.kind + "'");
    }
    return art;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed model file: ") + e.what());
  }
}

json artifact_to_json(const ModelArtifact& artifact) {
  return artifact.kind == "functional_cca" ? model_to_json(artifact.functional, artifact.meta)
                                           : model_to_json(artifact.euclidean, artifact.meta);
}

json truth_to_json(const sim::SimTruth& truth) {
  const auto& c = truth.config;
  json cfg = {{"p", c.p},
              {"d", c.d},
              {"m", c.m},
              {"grid_size", c.grid_size},
              {"K", c.K},
              {"support_size", c.support_size},
              {"gammas", c.gammas},
              {"contamination_variance", c.contamination_variance},
              {"max_degree", c.max_degree},
              {"seed", c.seed}};
  json j;
  j["format"] = "sfcca-truth";
  j["version"] = "1.0";
  j["config"] = cfg;
  j["grid"] = truth.mu->grid().points();
  j["mu"] = spd_curve_json(*truth.mu);
  j["phis"] = field_list_json(truth.phis, truth.mu->size(), truth.mu->dim());
  json labels = json::array();
  for (const auto& [k, deg] : truth.phi_labels) labels.push_back({k, deg});
  j["phi_labels"] = labels;
  j["etas"] = matrix_to_json(truth.etas);
  j["thetas"] = matrix_to_json(truth.thetas);
  j["support"] = truth.support;
  j["sigma_x"] = matrix_to_json(truth.sigma_x);
  j["sigma_y"] = matrix_to_json(truth.sigma_y);
  j["gammas"] = vector_json(truth.gammas);
  return j;
}

sim::SimTruth truth_from_json(const json& j) {
  try {
    if (!j.is_object() || j.value("format", "") != "sfcca-truth") throw ValidationError("not an sfcca truth file");
    sim::SimTruth t;
    const json& c = j.at("config");
    t.config.p = c.at("p").get<int>();
    t.config.d = c.at("d").get<int>();
    t.config.m = c.at("m").get<int>();
    t.config.grid_size = c.at("grid_size").get<int>();
    t.config.K = c.at("K").get<int>();
    t.config.support_size = c.at("support_size").get<int>();
    t.config.gammas = c.at("gammas").get<std::vector<double>>();
    t.config.contamination_variance = c.at("contamination_variance").get<double>();
    t.config.max_degree = c.at("max_degree").get<int>();
    t.config.seed = c.at("seed").get<std::uint64_t>();
    const TimeGrid grid(j.at("grid").get<std::vector<double>>());
    std::vector<SPDMatrix> mu_vals;
    for (auto& a : matrices_from_json(j.at("mu"), 1)) mu_vals.emplace_back(std::move(a));
    t.mu = std::make_shared<const SPDCurve>(grid, std::move(mu_vals));
    for (auto& f : fields_from_json(j.at("phis"))) {
      std::vector<SymMatrix> vals;
      for (auto& a : f) vals.emplace_back(std::move(a));
      t.phis.emplace_back(t.mu, std::move(vals));
    }
    for (const auto& pair : j.at("phi_labels")) t.phi_labels.emplace_back(pair.at(0).get<int>(), pair.at(1).get<int>());
    t.etas = matrix_from_json(j.at("etas"));
    t.thetas = matrix_from_json(j.at("thetas"));
    t.support = j.at("support").get<std::vector<int>>();
    t.sigma_x = matrix_from_json(j.at("sigma_x"));
    t.sigma_y = matrix_from_json(j.at("sigma_y"));
    t.gammas = vector_from_json(j.at("gammas"));
    if (static_cast<int>(t.phis.size()) != t.config.d + 1 || t.etas.rows() != t.config.d ||
        t.thetas.rows() != t.config.p) {
      throw ValidationError("truth parts have inconsistent sizes");
    }
    sim::finalize_truth(t);
    return t;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed truth file: ") + e.what());
  }
}

}  // namespace sfcca::io
