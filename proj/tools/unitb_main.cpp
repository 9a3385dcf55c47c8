#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "unitb/checker.hpp"
#include "unitb/parser.hpp"
#include "unitb/smt.hpp"

using namespace unitb;
namespace fs = std::filesystem;

namespace {

bool want_color() {
  const char* env = std::getenv("UNITB_COLOR");
  if (env) return std::string(env) != "0";
  return false;
}

int load_or_die(const std::vector<std::string>& paths, Development& dev) {
  std::string err;
  dev = load_development(paths, &err);
  if (!err.empty()) {
    std::cerr << "error: " << err << "\n";
    return 2;
  }
  if (dev.machines.empty()) {
    std::cerr << "error: no machines loaded\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"unitb - Unit-B machine verifier"};
  app.require_subcommand(1);

  std::vector<std::string> paths;
  bool json = false;
  CheckConfig cfg;
  std::string label, outdir;

  auto add_common = [&](CLI::App* cmd, bool with_paths = true) {
    if (with_paths) cmd->add_option("paths", paths, "machine files, directories or a .ub-dev index")->required();
    cmd->add_flag("--json", json, "machine-readable report");
    cmd->add_option("--state-limit", cfg.state_limit, "max states of a transition system");
    cmd->add_option("--po-limit", cfg.po_limit, "enumeration budget per obligation");
    cmd->add_option("--seed", cfg.seed, "seed for randomized helpers");
    cmd->add_flag("--oracle", cfg.oracle, "cross-check every certified property semantically");
    cmd->add_option("--naive-lasso", cfg.naive_max_states,
                    "use the subset-enumeration lasso engine up to N region states");
    cmd->add_option("--jobs", cfg.jobs, "obligation workers (reports stay deterministic)");
  };

  CLI::App* c_check = app.add_subcommand("check", "generate and discharge all obligations");
  add_common(c_check);
  CLI::App* c_mc = app.add_subcommand("mc", "model-check one declared property");
  add_common(c_mc);
  c_mc->add_option("--property", label, "property label")->required();
  CLI::App* c_po = app.add_subcommand("po", "dump proof obligations");
  add_common(c_po);
  CLI::App* c_export = app.add_subcommand("export", "write SMT-LIB2 scripts, one per obligation");
  add_common(c_export);
  c_export->add_option("--out", outdir, "output directory")->required();
  CLI::App* c_refine = app.add_subcommand("refine", "check the refinement steps only");
  add_common(c_refine);

  CLI11_PARSE(app, argc, argv);
  bool color = want_color() && !json;

  Development dev;
  int rc = load_or_die(paths, dev);
  if (rc) return rc;

  try {
    if (app.got_subcommand(c_check) || app.got_subcommand(c_refine)) {
      DevelopmentReport rep = check_development(dev, cfg);
      if (app.got_subcommand(c_refine)) {
        // refinement-only view, same exit discipline
        bool ok = rep.dependency_violations.empty();
        for (const auto& rr : rep.refinements) ok = ok && rr.ok;
        rep.ok = ok;
        if (rep.exit_code == 1 && ok) rep.exit_code = 0;
        if (!ok && rep.exit_code == 0) rep.exit_code = 1;
      }
      std::cout << (json ? report_to_json(rep) : report_to_text(rep, color));
      if (json) std::cout << "\n";
      return rep.exit_code;
    }
    if (app.got_subcommand(c_mc)) {
      const Machine* target = nullptr;
      const Property* prop = nullptr;
      for (const auto& m : dev.machines)
        if (const Property* p = m.property(label)) { target = &m; prop = p; }
      if (!prop) {
        std::cerr << "error: no property labelled " << label << "\n";
        return 2;
      }
      GoalRecord g = check_property_semantic(*target, *prop, cfg);
      if (json) {
        std::cout << "{\"name\":\"" << g.name << "\",\"ok\":" << (g.ok ? "true" : "false");
        if (!g.counterexample_json.empty()) std::cout << ",\"counterexample\":" << g.counterexample_json;
        std::cout << "}\n";
      } else {
        std::cout << g.name << ": " << (g.ok ? "holds" : "FAIL") << "\n";
        if (!g.detail.empty()) std::cout << "  " << g.detail << "\n";
        if (!g.counterexample_json.empty()) std::cout << g.counterexample_json << "\n";
      }
      return g.ok ? 0 : 1;
    }
    if (app.got_subcommand(c_po)) {
      std::vector<PoRecord> pos = dump_pos(dev, {}, cfg);
      if (json) {
        std::cout << pos_to_json(pos) << "\n";
      } else {
        for (const auto& r : pos)
          std::cout << (r.verdict.ok() ? "valid " : "FAIL  ") << r.po.name
                    << (r.verdict.ok() ? "" : "  " + verdict_str(r.verdict)) << "\n";
      }
      for (const auto& r : pos)
        if (!r.verdict.ok()) return 1;
      return 0;
    }
    if (app.got_subcommand(c_export)) {
      std::vector<PoRecord> pos = dump_pos(dev, {}, cfg);
      fs::create_directories(outdir);
      for (const auto& r : pos) {
        std::string fname = r.po.name;
        for (auto& ch : fname)
          if (ch == '/' || ch == ':') ch = '_';
        const Machine* m = dev.by_name(r.po.name.substr(0, r.po.name.find('/')));
        if (!m) m = &dev.machines.front();
        std::ofstream out(fs::path(outdir) / (fname + ".smt2"));
        out << export_smtlib(r.po, *m);
      }
      std::cout << "wrote " << pos.size() << " scripts to " << outdir << "\n";
      return 0;
    }
  } catch (const LimitError& e) {
    std::cerr << "limit: " << e.what() << "\n";
    return 3;
  } catch (const WdError& e) {
    std::cerr << "well-definedness failure: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
