// Python bindings over the core library. Slates cross the boundary as JSON
// Lines strings or AgentSlate objects; results come back as plain objects.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "divaudit/acpo.hpp"
#include "divaudit/errors.hpp"
#include "divaudit/evalharness.hpp"
#include "divaudit/pipeline.hpp"
#include "divaudit/theory_sim.hpp"
#include "divaudit/trap_miner.hpp"

namespace py = pybind11;
using namespace divaudit;

namespace {

std::optional<std::string> canonical(const std::optional<NormalizedAnswer>& a) {
  return a ? std::optional<std::string>(a->canonical) : std::nullopt;
}

AuditSetup setup_for(const TreeConfig& tree, const RuleSplitter& s, const HashingEmbedder& e) {
  tree.validate();
  return AuditSetup{&s, &e, tree, Rubric{}};
}

ScriptedOracle oracle_for(const std::vector<AgentSlate>& slates, const OracleParams& params) {
  std::map<std::string, NormalizedAnswer> gold;
  for (const auto& s : slates)
    if (auto g = s.gold()) gold.emplace(s.id, *g);
  return ScriptedOracle(params, std::move(gold));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Divergence-point auditing of multi-agent reasoning slates";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<BackendError>(m, "BackendError", PyExc_RuntimeError);

  py::class_<AgentOutput>(m, "AgentOutput")
      .def(py::init<std::string, std::string, std::optional<std::string>>(), py::arg("agent_id"), py::arg("text"),
           py::arg("answer") = std::nullopt)
      .def_readwrite("agent_id", &AgentOutput::agent_id)
      .def_readwrite("text", &AgentOutput::text)
      .def_readwrite("answer", &AgentOutput::answer);

  py::class_<AgentSlate>(m, "AgentSlate")
      .def(py::init([](std::string id, std::string question, std::optional<std::string> gold,
                       std::vector<AgentOutput> agents) {
             return AgentSlate{std::move(id), std::move(question), std::move(gold), std::move(agents)};
           }),
           py::arg("id"), py::arg("question"), py::arg("gold_answer"), py::arg("agents"))
      .def_readwrite("id", &AgentSlate::id)
      .def_readwrite("question", &AgentSlate::question)
      .def_readwrite("gold_answer", &AgentSlate::gold_answer)
      .def_readwrite("agents", &AgentSlate::agents)
      .def("to_json_line", &slate_to_json_line)
      .def_static("from_json_line", [](const std::string& line) { return slate_from_json_line(line); });

  py::class_<TreeConfig>(m, "TreeConfig")
      .def(py::init<>())
      .def_readwrite("tau", &TreeConfig::tau)
      .def_readwrite("rho_ema", &TreeConfig::rho_ema)
      .def_readwrite("delta_depth", &TreeConfig::delta_depth);

  py::class_<PolicyConfig>(m, "PolicyConfig")
      .def(py::init<>())
      .def_readwrite("lambda_gate", &PolicyConfig::lambda_gate)
      .def_readwrite("beam_k", &PolicyConfig::beam_k)
      .def_readwrite("window_k", &PolicyConfig::window_k)
      .def_readwrite("delta_depth", &PolicyConfig::delta_depth)
      .def_readwrite("hints", &PolicyConfig::hints)
      .def_readwrite("seed", &PolicyConfig::seed);

  py::class_<OracleParams>(m, "OracleParams")
      .def(py::init<double, double, std::uint64_t>(), py::arg("q") = 1.0, py::arg("alpha_emit") = 1.0,
           py::arg("seed") = 0)
      .def_readwrite("q", &OracleParams::q)
      .def_readwrite("alpha_emit", &OracleParams::alpha_emit)
      .def_readwrite("seed", &OracleParams::seed);

  py::class_<AggregationResult>(m, "AggregationResult")
      .def_readonly("instance_id", &AggregationResult::instance_id)
      .def_property_readonly("method", [](const AggregationResult& r) { return to_string(r.method); })
      .def_property_readonly("status", [](const AggregationResult& r) { return to_string(r.status); })
      .def_property_readonly("answer", [](const AggregationResult& r) { return canonical(r.answer); })
      .def_readonly("tokens_in", &AggregationResult::tokens_in)
      .def_readonly("tokens_out", &AggregationResult::tokens_out)
      .def_readonly("degraded", &AggregationResult::degraded)
      .def_readonly("max_beam", &AggregationResult::max_beam)
      .def_property_readonly("judge_calls", &AggregationResult::judge_calls);

  m.def("normalize_answer", [](const std::string& raw) { return normalize_answer(raw).canonical; });
  m.def("answers_equal", [](const std::string& a, const std::string& b) {
    return answers_equal(normalize_answer(a), normalize_answer(b));
  });
  m.def("load_slates", [](const std::string& path) { return load_slates(path); });
  m.def("classify_regime", [](const AgentSlate& s) { return std::string(to_string(classify_regime(s))); });

  m.def("majority_vote", &majority_vote);
  m.def(
      "audit",
      [](const AgentSlate& slate, const OracleParams& oracle, const TreeConfig& tree, const PolicyConfig& policy) {
        const RuleSplitter splitter;
        const HashingEmbedder embedder;
        auto judge = oracle_for({slate}, oracle);
        return audit_aggregate(slate, setup_for(tree, splitter, embedder), policy, judge);
      },
      py::arg("slate"), py::arg("oracle") = OracleParams{}, py::arg("tree") = TreeConfig{},
      py::arg("policy") = PolicyConfig{}, "Tree auditing with a scripted oracle judge.");
  m.def(
      "tree_json",
      [](const AgentSlate& slate, const TreeConfig& tree) {
        tree.validate();
        return build_slate_tree(slate, RuleSplitter{}, HashingEmbedder{}, tree).dump_json();
      },
      py::arg("slate"), py::arg("tree") = TreeConfig{});
  m.def(
      "mine_traps",
      [](const std::vector<AgentSlate>& slates, const TreeConfig& tree) {
        const RuleSplitter splitter;
        const HashingEmbedder embedder;
        const auto r = mine_traps(slates, setup_for(tree, splitter, embedder));
        std::vector<std::string> lines;
        for (const auto& t : r.triplets) lines.push_back(triplet_to_json_line(t));
        return py::make_tuple(lines, skip_stats_json(r.skips));
      },
      py::arg("slates"), py::arg("tree") = TreeConfig{},
      "Returns (triplet JSON lines, skip statistics JSON).");

  m.def(
      "acpo_loss",
      [](double tw, double rw, double tl, double rl, double beta) { return acpo_loss({tw, rw, tl, rl, beta}); },
      py::arg("logp_theta_w"), py::arg("logp_ref_w"), py::arg("logp_theta_l"), py::arg("logp_ref_l"),
      py::arg("beta") = 0.1);
  m.def(
      "acpo_grad",
      [](double tw, double rw, double tl, double rl, double beta) {
        const auto g = acpo_grad({tw, rw, tl, rl, beta});
        return py::make_tuple(g.d_logp_theta_w, g.d_logp_theta_l);
      },
      py::arg("logp_theta_w"), py::arg("logp_ref_w"), py::arg("logp_theta_l"), py::arg("logp_ref_l"),
      py::arg("beta") = 0.1);

  m.def("theoretical_var_mean", &theoretical_var_mean, py::arg("p"), py::arg("rho"), py::arg("n"));
  m.def(
      "estimate_var_mean",
      [](std::size_t n, double p, double rho, std::size_t trials, std::uint64_t seed, std::size_t jobs) {
        JuryConfig cfg{n, p, rho, trials, seed};
        py::gil_scoped_release release;
        const auto e = estimate_var_mean(cfg, jobs);
        py::gil_scoped_acquire acquire;
        py::dict d;
        d["empirical"] = e.empirical;
        d["theoretical"] = e.theoretical;
        d["standard_error"] = e.standard_error;
        d["mv_accuracy"] = e.mv_accuracy;
        return d;
      },
      py::arg("n"), py::arg("p"), py::arg("rho"), py::arg("trials") = 100000, py::arg("seed") = 0,
      py::arg("jobs") = 1);
  m.def(
      "mv_vs_auditor",
      [](std::size_t n_err, std::size_t n_cor, double q, std::size_t trials, std::uint64_t seed) {
        const auto r = mv_vs_auditor(n_err, n_cor, q, trials, seed);
        return py::make_tuple(r.mv_accuracy, r.auditor_accuracy);
      },
      py::arg("n_err"), py::arg("n_cor"), py::arg("q"), py::arg("trials"), py::arg("seed") = 0);
}
