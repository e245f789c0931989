// Command-line front end: CSV in, CSV/PPM out, exit 0 on success, 1 on
// validation problems, 2 on I/O problems.

#include <edisco/edisco.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
  if (path == "-") {
    std::ostringstream buffer;
    buffer << std::cin.rdbuf();
    return buffer.str();
  }
  std::ifstream file(path, std::ios::binary);
  if (!file) throw io_error("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return buffer.str();
}

std::vector<double> read_column(const std::string& path) {
  std::istringstream stream(read_text(path));
  auto values = edisco::parse_value_column(stream);
  if (values.empty()) throw edisco::parse_error("no values in " + path);
  return values;
}

void write_text(const std::string& path, const std::string& content) {
  if (path == "-") {
    std::cout.write(content.data(),
                    static_cast<std::streamsize>(content.size()));
    std::cout.flush();
    if (!std::cout) throw io_error("cannot write to standard output");
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw io_error("cannot open file for writing: " + path);
  file.write(content.data(), static_cast<std::streamsize>(content.size()));
  file.flush();
  if (!file) throw io_error("cannot write file: " + path);
}

edisco::sorted_evalues read_sorted_evalues(const std::string& path) {
  return edisco::sorted_evalues::from_unsorted(read_column(path));
}

// "RxC", e.g. "200x100"
edisco::crop_region parse_crop(const std::string& text) {
  const auto split = text.find('x');
  std::size_t rows = 0, columns = 0, used1 = 0, used2 = 0;
  try {
    rows = std::stoul(text.substr(0, split), &used1);
    if (split != std::string::npos)
      columns = std::stoul(text.substr(split + 1), &used2);
  } catch (const std::exception&) {
    throw std::invalid_argument("crop must look like ROWSxCOLUMNS");
  }
  if (split == std::string::npos || used1 != split ||
      used2 != text.size() - split - 1)
    throw std::invalid_argument("crop must look like ROWSxCOLUMNS");
  return {rows, columns};
}

struct simulate_options {
  edisco::gaussian_scenario scenario;
  std::string config;
  std::string output = "-";
};

// CLI11 only consults a config file registered on the root command, so the
// simulate subcommand reads its own key=value file. Explicit flags win over
// file entries; every entry is validated either way.
void apply_simulate_config(const CLI::App& cmd, const std::string& path,
                           edisco::gaussian_scenario& sc) {
  std::ifstream file(path);
  if (!file) throw io_error("cannot open config file: " + path);
  auto trim = [](std::string s) {
    const auto notspace = [](unsigned char c) { return std::isspace(c) == 0; };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
    s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
    return s;
  };
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(file, line)) {
    ++lineno;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      throw edisco::parse_error(path + " line " + std::to_string(lineno) +
                                ": expected key=value");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    const auto bad_value = [&] {
      return edisco::parse_error(path + " line " + std::to_string(lineno) +
                                 ": bad value '" + value + "' for " + key);
    };
    auto number = [&] {
      try {
        std::size_t used = 0;
        const double parsed = std::stod(value, &used);
        if (used == value.size()) return parsed;
      } catch (const std::exception&) {
      }
      throw bad_value();
    };
    auto integer = [&]() -> std::uint64_t {
      try {
        std::size_t used = 0;
        if (!value.empty() && value[0] != '-') {
          const std::uint64_t parsed = std::stoull(value, &used);
          if (used == value.size()) return parsed;
        }
      } catch (const std::exception&) {
      }
      throw bad_value();
    };
    if (key == "K") {
      const auto v = integer();
      if (cmd.count("--K") == 0) sc.K = v;
    } else if (key == "delta") {
      const auto v = number();
      if (cmd.count("--delta") == 0) sc.delta = v;
    } else if (key == "eta") {
      const auto v = number();
      if (cmd.count("--eta") == 0) sc.eta = v;
    } else if (key == "seed") {
      const auto v = integer();
      if (cmd.count("--seed") == 0) sc.seed = v;
    } else if (key == "fraction_false") {
      const auto v = number();
      if (cmd.count("--fraction_false") == 0) sc.fraction_false = v;
    } else {
      throw edisco::parse_error(path + " line " + std::to_string(lineno) +
                                ": unknown key '" + key + "'");
    }
  }
}

void run_simulate(const simulate_options& opt) {
  const auto obs = edisco::generate_observations(opt.scenario);
  std::string out;
  for (std::size_t k = 0; k < obs.values.size(); ++k) {
    out += edisco::format_value(obs.values[k]);
    out += obs.is_alternative[k] ? ",1\n" : ",0\n";
  }
  write_text(opt.output, out);
}

struct evalues_options {
  std::string input = "-";
  std::string output = "-";
  double delta = -3.0;
  double eta = 1.0;
  bool use_eta = false;
  bool pvalues = false;
};

void run_evalues(const evalues_options& opt) {
  if (opt.pvalues && opt.use_eta)
    throw std::invalid_argument("--p does not combine with --eta");
  const auto xs = read_column(opt.input);
  std::vector<double> out(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (opt.pvalues)
      out[k] = edisco::gaussian_p(xs[k]);
    else if (opt.use_eta)
      out[k] = edisco::generalized_bayes_e(xs[k], opt.delta, opt.eta);
    else
      out[k] = edisco::likelihood_ratio_e(xs[k], opt.delta);
  }
  write_text(opt.output, edisco::format_value_column(out));
}

struct matrix_options {
  std::string input = "-";
  std::string output = "-";
  std::string merge = "am";
  std::size_t threads = 0;
};

void run_matrix(const matrix_options& opt) {
  const auto sorted = read_sorted_evalues(opt.input);
  edisco::discovery_matrix matrix(1, edisco::merge_kind::arithmetic_mean);
  if (opt.merge == "am") {
    matrix = edisco::am_discovery_matrix(sorted, opt.threads);
  } else if (opt.merge == "bonferroni") {
    matrix = edisco::bonferroni_discovery_matrix(sorted);
  } else if (opt.merge == "simes") {
    matrix = edisco::discovery_matrix_generic(edisco::merge_kind::simes, sorted,
                                              opt.threads);
  } else if (opt.merge == "generic") {
    // Same values as --merge am via the family-sweep engine; kept as a
    // cross-check path.
    matrix = edisco::discovery_matrix_generic(edisco::merge_kind::arithmetic_mean,
                                              sorted, opt.threads);
  } else {
    throw std::invalid_argument("unknown merge rule: " + opt.merge);
  }
  write_text(opt.output, edisco::export_csv(matrix));
}

struct row_options {
  std::string input = "-";
  std::string output = "-";
  std::size_t r = 0;
};

void run_row(const row_options& opt) {
  const auto sorted = read_sorted_evalues(opt.input);
  const auto row = edisco::am_discovery_row(sorted, opt.r);
  write_text(opt.output, edisco::format_value_column(row));
}

struct vector_options {
  std::string input = "-";
  std::string indices;
  std::string output = "-";
  std::string merge = "am";
};

edisco::merge_kind merge_kind_from_name(const std::string& name) {
  if (name == "am") return edisco::merge_kind::arithmetic_mean;
  if (name == "bonferroni") return edisco::merge_kind::bonferroni;
  if (name == "simes") return edisco::merge_kind::simes;
  throw std::invalid_argument("unknown merge rule: " + name);
}

void run_vector(const vector_options& opt) {
  const auto sorted = read_sorted_evalues(opt.input);
  const auto raw = read_column(opt.indices);
  std::vector<std::size_t> positions;
  positions.reserve(raw.size());
  for (double v : raw) {
    if (!(v >= 1.0) || v != std::floor(v) ||
        v > static_cast<double>(sorted.size()))
      throw std::domain_error(
          "rejection indices must be integers between 1 and " +
          std::to_string(sorted.size()));
    // 1-based index into the input order, mapped to the sorted position.
    positions.push_back(
        sorted.position_of(static_cast<std::size_t>(v) - 1));
  }
  const edisco::rejection_set rejected(std::move(positions), sorted.size());
  const auto out =
      edisco::discovery_vector(merge_kind_from_name(opt.merge), sorted, rejected);
  write_text(opt.output, edisco::format_value_column(out));
}

struct conformal_options {
  std::string input = "-";
  std::string output = "-";
  std::string groups;
  std::string groups_file;
  edisco::permutation_config cfg;
  std::size_t threads = 0;
};

void run_conformal(const conformal_options& opt) {
  if (opt.groups.empty() == opt.groups_file.empty())
    throw std::invalid_argument("give group labels via --groups or --groups-file");
  const std::string label_text =
      opt.groups.empty() ? read_text(opt.groups_file) : opt.groups;
  const auto labels = edisco::parse_group_labels(label_text);
  std::istringstream stream(read_text(opt.input));
  const auto data = edisco::load_expression_dataset(stream, labels);
  const auto table = edisco::compute_conformal_table(data, opt.cfg, opt.threads);
  std::string out = "gene_id,t,T,e_conformal,e_simplified,p_conformal,p_st\n";
  for (std::size_t g = 0; g < table.gene_ids.size(); ++g) {
    out += table.gene_ids[g];
    for (double v : {table.t[g], table.score[g], table.e_conformal[g],
                     table.e_simplified[g], table.p_conformal[g],
                     table.p_st[g]}) {
      out += ',';
      out += edisco::format_value(v);
    }
    out += '\n';
  }
  write_text(opt.output, out);
}

struct render_options {
  std::string input = "-";
  std::string output = "-";
  std::string scale = "jeffreys";
  std::string crop;
};

void run_render(const render_options& opt) {
  const auto rows = edisco::parse_triangular_csv(read_text(opt.input));
  edisco::color_map map;
  if (opt.scale == "jeffreys") {
    map = edisco::color_map::jeffreys();
  } else if (opt.scale == "fisher") {
    map = edisco::color_map::fisher();
  } else {
    throw std::invalid_argument("unknown scale: " + opt.scale);
  }
  std::optional<edisco::crop_region> crop;
  if (!opt.crop.empty()) crop = parse_crop(opt.crop);
  write_text(opt.output, edisco::render_triangular(rows, map, crop));
}

struct calibrate_options {
  std::string input = "-";
  std::string output = "-";
  double kappa = 0.5;
  bool kappa_given = false;
  bool vs = false;
  bool to_p = false;
};

void run_calibrate(const calibrate_options& opt) {
  const int modes = int(opt.kappa_given) + int(opt.vs) + int(opt.to_p);
  if (modes != 1)
    throw std::invalid_argument(
        "choose exactly one of --kappa, --vs, --to-p");
  auto values = read_column(opt.input);
  for (auto& v : values) {
    if (opt.to_p)
      v = edisco::e_to_p(v);
    else if (opt.vs)
      v = edisco::vs_bound(v);
    else
      v = edisco::calibrate_p_to_e(v, opt.kappa);
  }
  write_text(opt.output, edisco::format_value_column(values));
}

struct fdr_options {
  std::string input = "-";
  std::vector<double> qs;
};

void run_fdr(const fdr_options& opt) {
  const auto pvalues = read_column(opt.input);
  const auto qs = opt.qs.empty() ? std::vector<double>{0.05} : opt.qs;
  std::string out;
  for (double q : qs) {
    if (qs.size() > 1) {
      char label[40];
      std::snprintf(label, sizeof label, "q: %g\n", q);
      out += label;
    }
    out += "BH: " + std::to_string(edisco::bh_rejections(pvalues, q)) + "\n";
    out += "BY: " + std::to_string(edisco::by_rejections(pvalues, q)) + "\n";
  }
  write_text("-", out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "True-discovery guarantees from e-values: simulation, discovery "
      "matrices, conformal e-values, calibration, rendering"};
  app.require_subcommand(1);

  simulate_options sim;
  auto* sim_cmd =
      app.add_subcommand("simulate", "Draw the Gaussian testbed observations");
  sim_cmd->add_option("--K", sim.scenario.K, "number of hypotheses");
  sim_cmd->add_option("--delta", sim.scenario.delta, "alternative mean");
  sim_cmd->add_option("--eta", sim.scenario.eta, "learning rate (recorded only)");
  sim_cmd->add_option("--seed", sim.scenario.seed, "random seed");
  sim_cmd->add_option("--fraction_false,--fraction-false",
                      sim.scenario.fraction_false,
                      "share of alternative hypotheses");
  auto* sim_cfg = sim_cmd->add_option(
      "--config", sim.config,
      "key=value file with K, delta, eta, seed, fraction_false");
  sim_cmd->add_option("-o,--output", sim.output, "observations CSV (x,truth)");

  evalues_options ev;
  auto* ev_cmd = app.add_subcommand(
      "evalues", "Turn observations into base e-values or p-values");
  ev_cmd->add_option("-i,--input", ev.input, "observations CSV");
  ev_cmd->add_option("-o,--output", ev.output, "one value per line");
  ev_cmd->add_option("--delta", ev.delta, "alternative mean of the bet");
  auto* eta_opt =
      ev_cmd->add_option("--eta", ev.eta, "generalized Bayes learning rate");
  ev_cmd->add_flag("--p", ev.pvalues, "emit one-sided p-values instead");

  matrix_options mx;
  auto* mx_cmd =
      app.add_subcommand("matrix", "Full discovery matrix from base e-values");
  mx_cmd->add_option("-i,--input", mx.input, "e-values, one per line");
  mx_cmd->add_option("-o,--output", mx.output, "triangular CSV");
  mx_cmd->add_option("--merge", mx.merge, "am, bonferroni, simes, or generic")
      ->check(CLI::IsMember({"am", "bonferroni", "simes", "generic"}));
  mx_cmd->add_option("--threads", mx.threads, "worker cap, 0 = auto");

  row_options rw;
  auto* rw_cmd = app.add_subcommand(
      "row", "One arithmetic-mean discovery row in linear time");
  rw_cmd->add_option("-i,--input", rw.input, "e-values, one per line");
  rw_cmd->add_option("-o,--output", rw.output, "one value per line");
  rw_cmd->add_option("--r", rw.r, "row index (rejection count)")->required();

  vector_options vec;
  auto* vec_cmd = app.add_subcommand(
      "vector", "Discovery vector for an explicit rejection set");
  vec_cmd->add_option("-i,--input", vec.input, "e-values, one per line");
  vec_cmd->add_option("--indices", vec.indices,
                      "file of 1-based indices into the input order")
      ->required();
  vec_cmd->add_option("-o,--output", vec.output, "one value per line");
  vec_cmd->add_option("--merge", vec.merge, "am, bonferroni, or simes")
      ->check(CLI::IsMember({"am", "bonferroni", "simes"}));

  conformal_options cf;
  auto* cf_cmd = app.add_subcommand(
      "conformal", "Permutation e-values for two-group expression data");
  cf_cmd->add_option("-i,--input", cf.input, "expression table (CSV or TSV)");
  cf_cmd->add_option("-o,--output", cf.output, "per-gene result CSV");
  cf_cmd->add_option("--groups", cf.groups, "labels like 1,1,2,2");
  cf_cmd->add_option("--groups-file", cf.groups_file, "file with the labels");
  cf_cmd->add_option("--permutations", cf.cfg.permutations,
                     "relabelings per gene");
  cf_cmd->add_option("--seed", cf.cfg.seed, "random seed");
  cf_cmd->add_option("--exponent", cf.cfg.score_exponent, "score exponent d");
  cf_cmd->add_option("--threads", cf.threads, "worker cap, 0 = auto");

  render_options rd;
  auto* rd_cmd =
      app.add_subcommand("render", "Color a triangular matrix CSV as binary PPM");
  rd_cmd->add_option("-i,--input", rd.input, "triangular CSV");
  rd_cmd->add_option("-o,--output", rd.output, "PPM image");
  rd_cmd->add_option("--scale", rd.scale, "jeffreys (e) or fisher (p)")
      ->check(CLI::IsMember({"jeffreys", "fisher"}));
  rd_cmd->add_option("--crop", rd.crop, "top-left window, ROWSxCOLUMNS");

  calibrate_options cal;
  auto* cal_cmd = app.add_subcommand(
      "calibrate", "Transform a column between p-values and e-values");
  cal_cmd->add_option("-i,--input", cal.input, "values, one per line");
  cal_cmd->add_option("-o,--output", cal.output, "one value per line");
  auto* kappa_opt = cal_cmd->add_option("--kappa", cal.kappa,
                                        "power calibrator p -> e, kappa in (0,1]");
  cal_cmd->add_flag("--vs", cal.vs, "p -> e upper envelope");
  cal_cmd->add_flag("--to-p", cal.to_p, "e -> p via min(1, 1/e)");

  fdr_options fd;
  auto* fd_cmd = app.add_subcommand(
      "fdr", "BH and BY rejection counts for given q levels");
  fd_cmd->add_option("-i,--input", fd.input, "p-values, one per line");
  fd_cmd->add_option("--q", fd.qs, "FDR level, repeatable");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "edisco: " << e.what() << "\n";
    return 1;
  }

  ev.use_eta = eta_opt->count() > 0;
  cal.kappa_given = kappa_opt->count() > 0;

  try {
    if (sim_cmd->parsed()) {
      if (sim_cfg->count() > 0)
        apply_simulate_config(*sim_cmd, sim.config, sim.scenario);
      run_simulate(sim);
    }
    if (ev_cmd->parsed()) run_evalues(ev);
    if (mx_cmd->parsed()) run_matrix(mx);
    if (rw_cmd->parsed()) run_row(rw);
    if (vec_cmd->parsed()) run_vector(vec);
    if (cf_cmd->parsed()) run_conformal(cf);
    if (rd_cmd->parsed()) run_render(rd);
    if (cal_cmd->parsed()) run_calibrate(cal);
    if (fd_cmd->parsed()) run_fdr(fd);
  } catch (const edisco::parse_error& e) {
    std::cerr << "edisco: " << e.what() << "\n";
    return 2;
  } catch (const io_error& e) {
    std::cerr << "edisco: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "edisco: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
