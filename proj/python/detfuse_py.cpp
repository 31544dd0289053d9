#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "detfuse/augment.hpp"
#include "detfuse/error.hpp"
#include "detfuse/eval.hpp"
#include "detfuse/formats.hpp"
#include "detfuse/fusion.hpp"
#include "detfuse/geometry.hpp"
#include "detfuse/loss.hpp"
#include "detfuse/synth.hpp"

#define STRINGIFY(x) #x
#define MACRO_STRINGIFY(x) STRINGIFY(x)

namespace py = pybind11;
using namespace detfuse;

namespace {

template <typename T>
std::string repr(const T& v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

FusionOptions fusion_options(double iou_threshold, bool plain_max) {
  return FusionOptions{iou_threshold,
                       plain_max ? ProbabilityRule::kMax : ProbabilityRule::kMaxOverSupport};
}

void bind_errors(py::module_& m) {
  // Translators run most-recent first; derived types are registered last.
  auto& base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ContractError>(m, "ContractError", base.ptr());
  auto& domain = py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<DegenerateWeightsError>(m, "DegenerateWeightsError", domain.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
}

void bind_geometry(py::module_& m) {
  py::class_<Box>(m, "Box")
      .def(py::init<double, double, double, double>(), py::arg("x1"), py::arg("y1"), py::arg("x2"),
           py::arg("y2"))
      .def_property_readonly("x1", &Box::x1)
      .def_property_readonly("y1", &Box::y1)
      .def_property_readonly("x2", &Box::x2)
      .def_property_readonly("y2", &Box::y2)
      .def("as_tuple", [](const Box& b) { return py::make_tuple(b.x1(), b.y1(), b.x2(), b.y2()); })
      .def(py::self == py::self)
      .def("__repr__", [](const Box& b) { return "Box" + repr(b); });
  m.def("area", &area, py::arg("box"));
  m.def("iou", &iou, py::arg("a"), py::arg("b"));
}

void bind_fusion(py::module_& m) {
  py::class_<Detection>(m, "Detection")
      .def(py::init([](Box box, int class_id, double prob, int model_id, std::string image_id) {
             Detection d{box, class_id, prob, model_id, std::move(image_id)};
             validate(d);
             return d;
           }),
           py::arg("box"), py::arg("class_id"), py::arg("prob"), py::arg("model_id") = 0,
           py::arg("image_id") = "")
      .def_readwrite("box", &Detection::box)
      .def_readwrite("class_id", &Detection::class_id)
      .def_readwrite("prob", &Detection::prob)
      .def_readwrite("model_id", &Detection::model_id)
      .def_readwrite("image_id", &Detection::image_id)
      .def(py::self == py::self);

  py::class_<ClusterSummary>(m, "ClusterSummary")
      .def_readonly("box", &ClusterSummary::box)
      .def_readonly("prob", &ClusterSummary::prob)
      .def_readonly("class_id", &ClusterSummary::class_id)
      .def_readonly("support", &ClusterSummary::support);

  py::class_<FusedCluster>(m, "FusedCluster")
      .def_readonly("summary", &FusedCluster::summary)
      .def_readonly("members", &FusedCluster::members);

  m.def(
      "summarize",
      [](const std::vector<Detection>& members, bool plain_max) {
        return summarize(Cluster{members},
                         plain_max ? ProbabilityRule::kMax : ProbabilityRule::kMaxOverSupport);
      },
      py::arg("members"), py::arg("plain_max") = false);
  m.def(
      "merge_boxes",
      [](const std::vector<Detection>& dets, double thr, bool plain_max) {
        return merge_boxes(dets, fusion_options(thr, plain_max));
      },
      py::arg("detections"), py::arg("iou_threshold") = 0.5, py::arg("plain_max") = false);
  m.def(
      "fuse_clusters",
      [](const std::vector<Detection>& dets, double thr, bool plain_max) {
        return fuse_clusters(dets, fusion_options(thr, plain_max));
      },
      py::arg("detections"), py::arg("iou_threshold") = 0.5, py::arg("plain_max") = false);
}

void bind_eval(py::module_& m) {
  py::class_<GroundTruthRecord>(m, "GroundTruthRecord")
      .def(py::init([](std::string image_id, int class_id, Box box) {
             return GroundTruthRecord{std::move(image_id), class_id, box};
           }),
           py::arg("image_id"), py::arg("class_id"), py::arg("box"))
      .def_readwrite("image_id", &GroundTruthRecord::image_id)
      .def_readwrite("class_id", &GroundTruthRecord::class_id)
      .def_readwrite("box", &GroundTruthRecord::box);

  py::enum_<Verdict>(m, "Verdict")
      .value("TP", Verdict::kTruePositive)
      .value("FP", Verdict::kFalsePositive);

  py::class_<MatchOutcome>(m, "MatchOutcome")
      .def_readonly("detection", &MatchOutcome::detection)
      .def_readonly("verdict", &MatchOutcome::verdict)
      .def_readonly("matched_gt", &MatchOutcome::matched_gt)
      .def_readonly("iou", &MatchOutcome::iou);
  py::class_<MatchResult>(m, "MatchResult")
      .def_readonly("outcomes", &MatchResult::outcomes)
      .def_readonly("false_negatives", &MatchResult::false_negatives);
  m.def(
      "match_detections",
      [](const std::vector<Detection>& preds, const std::vector<GroundTruthRecord>& gts,
         double thr) { return match_detections(preds, gts, thr); },
      py::arg("preds"), py::arg("gts"), py::arg("iou_threshold") = 0.5);

  m.def(
      "precision_recall",
      [](std::size_t tp, std::size_t fp, std::size_t fn) {
        const auto pr = precision_recall(tp, fp, fn);
        return py::make_tuple(pr.precision, pr.recall);
      },
      py::arg("tp"), py::arg("fp"), py::arg("fn"));

  py::class_<PRCurve>(m, "PRCurve")
      .def_readonly("class_id", &PRCurve::class_id)
      .def_property_readonly("points",
                             [](const PRCurve& c) {
                               py::list out;
                               for (const auto& p : c.points)
                                 out.append(py::make_tuple(p.recall, p.precision));
                               return out;
                             })
      .def_readonly("tp", &PRCurve::tp)
      .def_readonly("fp", &PRCurve::fp)
      .def_readonly("fn", &PRCurve::fn);
  m.def(
      "build_pr_curve",
      [](int class_id, const std::vector<bool>& ranked_tp, std::size_t num_gt) {
        std::vector<Verdict> v;
        for (bool tp : ranked_tp)
          v.push_back(tp ? Verdict::kTruePositive : Verdict::kFalsePositive);
        return build_pr_curve(class_id, v, num_gt);
      },
      py::arg("class_id"), py::arg("ranked_tp"), py::arg("num_ground_truth"));

  py::class_<APResult>(m, "APResult")
      .def(py::init([](int class_id, double ap, std::size_t tp, std::size_t fp, std::size_t fn) {
             return APResult{class_id, ap, 0, tp, fp, fn};
           }),
           py::arg("class_id"), py::arg("ap"), py::arg("tp") = 1, py::arg("fp") = 0,
           py::arg("fn") = 0)
      .def_readonly("class_id", &APResult::class_id)
      .def_readonly("ap", &APResult::ap)
      .def_readonly("n_blocks", &APResult::n_blocks)
      .def_readonly("tp", &APResult::tp)
      .def_readonly("fp", &APResult::fp)
      .def_readonly("fn", &APResult::fn);
  m.def("average_precision", &average_precision, py::arg("curve"), py::arg("n_blocks") = 10);
  m.def("mean_ap", [](const std::vector<APResult>& r) { return mean_ap(r); }, py::arg("per_class"));

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("per_class", &EvalReport::per_class)
      .def_readonly("prediction_only_classes", &EvalReport::prediction_only_classes)
      .def_readonly("map", &EvalReport::map)
      .def_readonly("detection_rate", &EvalReport::detection_rate)
      .def_readonly("num_ground_truth", &EvalReport::num_ground_truth)
      .def_readonly("num_localized", &EvalReport::num_localized)
      .def_readonly("warnings", &EvalReport::warnings);
  m.def(
      "evaluate_dataset",
      [](const std::vector<Detection>& preds, const std::vector<GroundTruthRecord>& gts, double thr,
         int n_blocks) { return evaluate_dataset(preds, gts, EvalOptions{thr, n_blocks}); },
      py::arg("preds"), py::arg("gts"), py::arg("iou_threshold") = 0.5, py::arg("n_blocks") = 10);
}

void bind_loss(py::module_& m) {
  py::class_<CellBoxPrediction>(m, "CellBoxPrediction")
      .def(py::init(
               [](double x, double y, double w, double h, double conf, std::vector<double> probs) {
                 return CellBoxPrediction{x, y, w, h, conf, std::move(probs)};
               }),
           py::arg("x"), py::arg("y"), py::arg("w"), py::arg("h"), py::arg("conf"),
           py::arg("class_probs") = std::vector<double>{});
  py::class_<CellBoxTarget>(m, "CellBoxTarget")
      .def(py::init([](double x, double y, double w, double h, bool responsible, double conf,
                       std::optional<int> cls) {
             return CellBoxTarget{x, y, w, h, responsible, conf, cls};
           }),
           py::arg("x") = 0.0, py::arg("y") = 0.0, py::arg("w") = 0.0, py::arg("h") = 0.0,
           py::arg("responsible") = false, py::arg("conf") = 0.0,
           py::arg("target_class") = std::nullopt);
  py::class_<LossWeights>(m, "LossWeights")
      .def(py::init([](double c, double n) { return LossWeights{c, n}; }),
           py::arg("lambda_coord") = 5.0, py::arg("lambda_noobj") = 0.5)
      .def_readwrite("lambda_coord", &LossWeights::lambda_coord)
      .def_readwrite("lambda_noobj", &LossWeights::lambda_noobj);
  py::class_<LossBreakdown>(m, "LossBreakdown")
      .def_readonly("err_center", &LossBreakdown::err_center)
      .def_readonly("err_wh", &LossBreakdown::err_wh)
      .def_readonly("err_class", &LossBreakdown::err_class)
      .def_readonly("err_conf", &LossBreakdown::err_conf)
      .def_readonly("total", &LossBreakdown::total);
  m.def("yolo_loss", &yolo_loss, py::arg("predictions"), py::arg("targets"),
        py::arg("weights") = LossWeights{});
}

void bind_synth_and_io(py::module_& m) {
  py::class_<NoiseModel>(m, "NoiseModel")
      .def(py::init<>())
      .def_readwrite("jitter_sigma", &NoiseModel::jitter_sigma)
      .def_readwrite("drop_rate", &NoiseModel::drop_rate)
      .def_readwrite("fp_rate", &NoiseModel::fp_rate)
      .def_readwrite("calib_slope", &NoiseModel::calib_slope)
      .def_readwrite("calib_sigma", &NoiseModel::calib_sigma)
      .def_readwrite("misclass_rate", &NoiseModel::misclass_rate)
      .def_readwrite("num_classes", &NoiseModel::num_classes)
      .def_readwrite("canvas_width", &NoiseModel::canvas_width)
      .def_readwrite("canvas_height", &NoiseModel::canvas_height)
      .def_readwrite("seed", &NoiseModel::seed);
  m.def(
      "generate_model_detections",
      [](const std::vector<GroundTruthRecord>& gts, const NoiseModel& noise, int model_id) {
        return generate_model_detections(gts, noise, model_id);
      },
      py::arg("gts"), py::arg("noise"), py::arg("model_id") = 0);
  m.def(
      "generate_ensemble",
      [](const std::vector<GroundTruthRecord>& gts, const NoiseModel& noise, int k) {
        return generate_ensemble(gts, noise, k);
      },
      py::arg("gts"), py::arg("noise"), py::arg("k_models"));
  m.def(
      "make_fixture",
      [](int images, int classes, int boxes, std::uint64_t seed) {
        FixtureSpec spec;
        spec.images = images;
        spec.classes = classes;
        spec.boxes_per_image = boxes;
        spec.seed = seed;
        return make_fixture(spec);
      },
      py::arg("images") = 20, py::arg("classes") = 5, py::arg("boxes_per_image") = 4,
      py::arg("seed") = 2019);

  m.def("read_detection_file", &read_detection_file, py::arg("path"));
  m.def(
      "write_detection_file",
      [](const std::filesystem::path& p, const std::vector<Detection>& d) {
        write_detection_file(p, d);
      },
      py::arg("path"), py::arg("detections"));
  m.def("read_ground_truth", &read_ground_truth, py::arg("manifest"));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Detection ensemble fusion, mAP evaluation and YOLO loss reference";
  bind_errors(m);
  bind_geometry(m);
  bind_fusion(m);
  bind_eval(m);
  bind_loss(m);
  bind_synth_and_io(m);
#ifdef VERSION_INFO
  m.attr("__version__") = MACRO_STRINGIFY(VERSION_INFO);
#else
  m.attr("__version__") = "dev";
#endif
}
