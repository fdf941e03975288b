// satspline: fit, evaluate and inspect saturating-spline additive models from CSV.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "satspline/satspline.hpp"

namespace fs = std::filesystem;
using namespace satspline;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNotConverged = 3;

struct CommonOptions {
  std::string input;
  std::string target;
  std::string loss = "square";
  std::optional<double> delta;
  int degree = 1;
  std::optional<double> tau;
  std::optional<double> tau_min;
  std::optional<double> tau_max;
  std::size_t num_tau = 50;
  double gap_tol = 1e-6;
  int max_iters = 500;
  std::uint64_t seed = 0;
  std::string out;
  bool knot_move = false;
  double holdout = 0.2;
};

void add_data_flags(CLI::App* app, CommonOptions& o, bool target_required = true) {
  app->add_option("--input", o.input, "CSV file with a header row")->required()->check(CLI::ExistingFile);
  auto* t = app->add_option("--target", o.target, "response column name");
  if (target_required) t->required();
}

void add_model_flags(CLI::App* app, CommonOptions& o) {
  app->add_option("--loss", o.loss, "square | logistic | pseudo-huber")
      ->check(CLI::IsMember({"square", "logistic", "pseudo-huber", "pseudo_huber"}));
  app->add_option("--delta", o.delta, "pseudo-Huber delta (default 0.0015)");
  app->add_option("--degree", o.degree, "1 (piecewise linear) or 2 (quadratic, saturating to linear)")
      ->check(CLI::IsMember({1, 2}));
  app->add_option("--gap-tol", o.gap_tol, "relative duality-gap tolerance");
  app->add_option("--max-iters", o.max_iters, "outer iteration cap");
  app->add_flag("--knot-move", o.knot_move, "try discrete knot moves after convergence");
}

void add_grid_flags(CLI::App* app, CommonOptions& o) {
  app->add_option("--tau-min", o.tau_min, "smallest tau (default tau_max / 1e4)");
  app->add_option("--tau-max", o.tau_max, "largest tau (default 4 n std(y))");
  app->add_option("--num-tau", o.num_tau, "number of geometric grid points");
  app->add_option("--seed", o.seed, "seed for all random splits");
  app->add_option("--holdout", o.holdout, "holdout fraction");
}

LossSpec make_loss(const CommonOptions& o) {
  const LossKind kind = parse_loss_kind(o.loss);
  if (o.delta && kind != LossKind::PseudoHuber) throw InvalidInput("--delta only applies to --loss pseudo-huber");
  if (kind == LossKind::PseudoHuber) return LossSpec::pseudo_huber(o.delta.value_or(kDefaultHuberDelta));
  return kind == LossKind::Logistic ? LossSpec::logistic() : LossSpec::square();
}

FitConfig make_config(const CommonOptions& o) {
  FitConfig cfg;
  cfg.gap_tol = o.gap_tol;
  cfg.max_outer_iters = o.max_iters;
  cfg.degree = o.degree;
  cfg.knot_move = o.knot_move;
  if (o.tau) cfg.tau = *o.tau;
  cfg.validate();
  return cfg;
}

Dataset load(const CommonOptions& o, const LossSpec& loss) {
  Dataset ds = io::ingest_csv(o.input, o.target);
  ds.validate();
  validate_labels(loss, ds.y);
  return ds;
}

std::vector<double> make_grid(const CommonOptions& o, std::span<const double> y) {
  const double hi = o.tau_max.value_or(default_tau_max(y));
  const double lo = o.tau_min.value_or(hi / 1e4);
  return default_tau_grid(lo, hi, o.num_tau);
}

std::string sibling(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

int cmd_fit(const CommonOptions& o) {
  const LossSpec loss = make_loss(o);
  if (!o.tau) throw InvalidInput("fit requires --tau");
  const FitConfig cfg = make_config(o);
  const Dataset ds = load(o, loss);
  FitResult<GamModel> r = fit_gam(ds, loss, cfg);
  io::write_file(o.out, io::serialize_model(r.model));
  io::write_file(sibling(o.out, ".report.json"), io::report_json(r.report));
  std::cout << "tau=" << cfg.tau << " objective=" << r.report.final_objective << " gap=" << r.report.final_gap
            << " atoms=" << r.model.atom_count() << " features=" << r.model.selected_features() << "/" << r.model.dim()
            << " converged=" << (r.report.converged() ? "true" : "false") << "\n";
  return r.report.converged() ? kExitOk : kExitNotConverged;
}

// Picks the model's feature columns out of a CSV, by name when the model has names.
Matrix feature_matrix(const GamModel& model, const std::string& input, const std::string& target) {
  const io::CsvTable t = io::parse_csv(io::read_file(input));
  require(!t.rows.empty(), "CSV file has no data rows");
  std::vector<std::size_t> cols;
  if (!model.names.empty()) {
    for (const std::string& name : model.names) {
      auto it = std::find(t.header.begin(), t.header.end(), name);
      require(it != t.header.end(), "input is missing feature column '" + name + "'");
      cols.push_back(static_cast<std::size_t>(it - t.header.begin()));
    }
  } else {
    for (std::size_t c = 0; c < t.header.size(); ++c)
      if (t.header[c] != target) cols.push_back(c);
  }
  require(cols.size() == model.dim(), "input has " + std::to_string(cols.size()) + " feature columns, model expects " +
                                          std::to_string(model.dim()));
  Matrix X(t.rows.size(), cols.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t f = 0; f < cols.size(); ++f) X(r, f) = io::parse_number(t.rows[r][cols[f]], r + 1, t.header[cols[f]]);
  return X;
}

int cmd_predict(const std::string& model_path, const std::string& input, const std::string& target,
                const std::string& out) {
  const GamModel model = io::deserialize_model(io::read_file(model_path));
  const Matrix X = feature_matrix(model, input, target);
  io::write_file(out, io::predictions_csv(predict(model, X)));
  return kExitOk;
}

int cmd_path(const CommonOptions& o, const std::string& model_dir) {
  const LossSpec loss = make_loss(o);
  const FitConfig cfg = make_config(o);
  const Dataset ds = load(o, loss);
  const std::vector<double> taus = make_grid(o, ds.y);
  const HoldoutResult h = holdout_select(ds, loss, taus, o.holdout, o.seed, cfg, default_metric(loss));
  io::write_file(o.out, io::path_csv(h.path));
  const std::string dir = model_dir.empty() ? sibling(o.out, "_models") : model_dir;
  fs::create_directories(dir);
  for (std::size_t i = 0; i < h.path.points.size(); ++i)
    io::write_file((fs::path(dir) / ("model_" + std::to_string(i) + ".json")).string(),
                   io::serialize_model(h.path.points[i].model));
  std::cout << "seed=" << o.seed << " best_tau=" << io::format_double(h.best_tau) << " "
            << metric_name(h.path.metric) << "=" << io::format_double(h.path.points[h.best_index].val_metric) << "\n";
  const bool all_converged =
      std::all_of(h.path.points.begin(), h.path.points.end(), [](const PathPoint& p) { return p.converged; });
  return all_converged ? kExitOk : kExitNotConverged;
}

int cmd_cv(const CommonOptions& o, std::size_t trials) {
  const LossSpec loss = make_loss(o);
  FitConfig cfg = make_config(o);
  const Dataset ds = load(o, loss);
  const std::vector<double> taus = make_grid(o, ds.y);
  const RepeatedHoldoutResult r = repeated_holdout(ds, loss, taus, o.holdout, o.seed, trials, cfg, default_metric(loss));
  std::cout << "seed=" << o.seed << " trials=" << trials << " mean_best_tau=" << io::format_double(r.mean_best_tau) << "\n";
  for (std::size_t t = 0; t < trials; ++t)
    std::cout << "  trial " << t << ": best_tau=" << io::format_double(r.per_trial_best_tau[t])
              << " metric=" << io::format_double(r.per_trial_best_metric[t]) << "\n";
  if (o.out.empty()) return kExitOk;
  cfg.tau = r.mean_best_tau;
  FitResult<GamModel> fit = fit_gam(ds, loss, cfg);
  io::write_file(o.out, io::serialize_model(fit.model));
  io::write_file(sibling(o.out, ".report.json"), io::report_json(fit.report));
  return fit.report.converged() ? kExitOk : kExitNotConverged;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(io::parse_number(io::trim(item), 0, "--lambda-grid"));
  return out;
}

int cmd_baseline(const CommonOptions& o, std::size_t knots_per_feature, const std::string& lambda_grid,
                 const std::string& model_dir) {
  const LossSpec loss = make_loss(o);
  const Dataset ds = load(o, loss);
  const Split split = holdout_split(ds.n(), o.holdout, o.seed);
  const Dataset train = ds.subset(split.train);
  const Dataset hold = ds.subset(split.holdout);
  const auto scaling = fit_scaling(train.X);
  const Matrix Xs = apply_scaling(scaling, train.X);
  const std::vector<std::vector<double>> knots(ds.dim(), baseline::evenly_spaced_knots(knots_per_feature));
  const baseline::Design design = baseline::build_basis(Xs, knots);

  std::vector<double> lambdas;
  if (!lambda_grid.empty()) {
    lambdas = parse_list(lambda_grid);
  } else {
    const double hi = baseline::lambda_max(design.matrix, train.y, loss);
    std::vector<double> g = default_tau_grid(std::max(hi, 1e-12) * 1e-4, std::max(hi, 1e-12), o.num_tau);
    lambdas.assign(g.rbegin(), g.rend());
  }
  for (double l : lambdas) require(l >= 0.0, "lambdas must be non-negative");

  const Metric metric = default_metric(loss);
  std::ostringstream csv;
  csv << "lambda,tau_equiv,train_data_fit,val_metric,n_atoms,n_features_selected\n";
  std::optional<baseline::LassoFit> warm;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    baseline::LassoFit fit = baseline::fit_lasso(design.matrix, train.y, loss, lambdas[i], {}, warm ? &*warm : nullptr);
    const GamModel model = baseline::baseline_to_model(fit, design.basis, scaling, loss);
    const double val = evaluate_metric(metric, predict(model, hold.X), hold.y);
    csv << io::format_double(lambdas[i]) << "," << io::format_double(model.tau) << ","
        << io::format_double(fit.data_fit) << "," << io::format_double(val) << "," << model.atom_count() << ","
        << model.selected_features() << "\n";
    if (!model_dir.empty()) {
      fs::create_directories(model_dir);
      GamModel named = model;
      named.names = ds.names;
      io::write_file((fs::path(model_dir) / ("baseline_" + std::to_string(i) + ".json")).string(),
                     io::serialize_model(named));
    }
    warm = std::move(fit);
  }
  io::write_file(o.out, csv.str());
  return kExitOk;
}

// One CSV per feature: uniform samples of f_d over scaled [lo, hi] plus the knots.
int cmd_export_curves(const std::string& model_path, const std::string& out_dir, std::size_t points, double lo,
                      double hi) {
  require(points >= 2, "--points must be at least 2");
  require(hi > lo, "--hi must exceed --lo");
  const GamModel model = io::deserialize_model(io::read_file(model_path));
  fs::create_directories(out_dir);
  for (std::size_t d = 0; d < model.dim(); ++d) {
    std::ostringstream os;
    os << "kind,x_scaled,x_raw,value\n";
    const AffineScaling s = model.scaling[d];
    for (std::size_t i = 0; i < points; ++i) {
      const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
      os << "grid," << io::format_double(x) << "," << io::format_double(s.invert(x)) << ","
         << io::format_double(model.coordinate(d, x)) << "\n";
    }
    for (const Atom& a : model.per_feature[d].atoms())
      os << "knot," << io::format_double(a.t) << "," << io::format_double(s.invert(a.t)) << ","
         << io::format_double(model.coordinate(d, a.t)) << "\n";
    std::string stem = "feature_" + std::to_string(d);
    io::write_file((fs::path(out_dir) / (stem + ".csv")).string(), os.str());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Saturating-spline additive models fit by fully-corrective conditional gradient"};
  app.require_subcommand(1);
  CommonOptions o;

  auto* fit = app.add_subcommand("fit", "fit one model at a fixed tau");
  add_data_flags(fit, o);
  add_model_flags(fit, o);
  fit->add_option("--tau", o.tau, "l1 budget on the knot weights")->required();
  fit->add_option("--out", o.out, "model JSON path (report goes next to it)")->required();

  std::string model_path, pred_target;
  auto* pred = app.add_subcommand("predict", "evaluate a model on CSV rows");
  pred->add_option("--model", model_path, "model JSON")->required()->check(CLI::ExistingFile);
  pred->add_option("--input", o.input, "CSV with the model's feature columns")->required()->check(CLI::ExistingFile);
  pred->add_option("--target", pred_target, "column to ignore when the model has no feature names");
  pred->add_option("--out", o.out, "predictions CSV")->required();

  std::string model_dir;
  auto* path = app.add_subcommand("path", "warm-started regularization path with holdout scoring");
  add_data_flags(path, o);
  add_model_flags(path, o);
  add_grid_flags(path, o);
  path->add_option("--out", o.out, "path CSV")->required();
  path->add_option("--model-dir", model_dir, "directory for the per-tau models (default: <out stem>_models)");

  std::size_t trials = 10;
  auto* cv = app.add_subcommand("cv", "repeated random holdout; tau estimate is the mean of per-trial best taus");
  add_data_flags(cv, o);
  add_model_flags(cv, o);
  add_grid_flags(cv, o);
  cv->add_option("--trials", trials, "number of random splits");
  cv->add_option("--out", o.out, "refit on all data at the selected tau and write the model here");

  std::size_t knots_per_feature = 20;
  std::string lambda_grid;
  auto* base = app.add_subcommand("baseline", "gridded saturating-hinge lasso");
  add_data_flags(base, o);
  add_grid_flags(base, o);
  base->add_option("--loss", o.loss, "square | logistic | pseudo-huber")
      ->check(CLI::IsMember({"square", "logistic", "pseudo-huber", "pseudo_huber"}));
  base->add_option("--delta", o.delta, "pseudo-Huber delta");
  base->add_option("--knots-per-feature", knots_per_feature, "evenly spaced knots per feature");
  base->add_option("--lambda-grid", lambda_grid, "comma-separated penalties (default: geometric below lambda_max)");
  base->add_option("--out", o.out, "results CSV")->required();
  base->add_option("--model-dir", model_dir, "also write the converted models here");

  std::size_t points = 256;
  double lo = -0.1, hi = 1.1;
  std::string out_dir;
  auto* curves = app.add_subcommand("export-curves", "sample each coordinate function to CSV");
  curves->add_option("--model", model_path, "model JSON")->required()->check(CLI::ExistingFile);
  curves->add_option("--out", out_dir, "output directory")->required();
  curves->add_option("--points", points, "grid points per feature");
  curves->add_option("--lo", lo, "left end of the scaled grid");
  curves->add_option("--hi", hi, "right end of the scaled grid");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*fit) return cmd_fit(o);
    if (*pred) return cmd_predict(model_path, o.input, pred_target, o.out);
    if (*path) return cmd_path(o, model_dir);
    if (*cv) return cmd_cv(o, trials);
    if (*base) return cmd_baseline(o, knots_per_feature, lambda_grid, model_dir);
    if (*curves) return cmd_export_curves(model_path, out_dir, points, lo, hi);
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
