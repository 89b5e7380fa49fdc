#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "lfdeblur/light_field.hpp"
#include "lfdeblur/metrics.hpp"
#include "lfdeblur/model/checkpoint.hpp"
#include "lfdeblur/model/network.hpp"
#include "lfdeblur/trajectory.hpp"
#include "lfdeblur/warp.hpp"

namespace py = pybind11;
using namespace lfdeblur;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor<double> tensor_from(const DoubleArray& a, int rank, const char* what) {
  const py::buffer_info info = a.request();
  if (info.ndim != rank)
    throw ShapeError(std::string(what) + ": expected a rank-" + std::to_string(rank) + " array, got rank " +
                     std::to_string(info.ndim));
  std::vector<int64_t> dims(info.shape.begin(), info.shape.end());
  Tensor<double> t(dims);
  std::memcpy(t.data(), info.ptr, size_t(t.size()) * sizeof(double));
  return t;
}

py::array_t<double> array_from(const Tensor<double>& t) {
  std::vector<py::ssize_t> shape;
  for (int i = 0; i < t.rank(); ++i) shape.push_back(py::ssize_t(t.dim(i)));
  py::array_t<double> a(shape);
  std::memcpy(a.mutable_data(), t.data(), size_t(t.size()) * sizeof(double));
  return a;
}

LightField lf_from(const DoubleArray& a) { return LightField(tensor_from(a, 5, "light field")); }
Image image_from(const DoubleArray& a) { return tensor_from(a, 3, "image"); }

EpiOrientation orientation_from(const std::string& s) {
  if (s == "horizontal") return EpiOrientation::Horizontal;
  if (s == "vertical") return EpiOrientation::Vertical;
  throw ConfigError("epi orientation must be 'horizontal' or 'vertical', got '" + s + "'");
}

py::array_t<double> infer(const std::string& ckpt, const DoubleArray& blurred) {
  const ModelParams<float> p = load_model_checkpoint<float>(ckpt);
  const Tensor<double> in64 = tensor_from(blurred, 5, "infer");
  Tensor<float> in(in64.shape());
  for (int64_t i = 0; i < in.size(); ++i) in.data()[i] = float(in64.data()[i]);
  const Tensor<float> out = forward_nocache(p, in);
  Tensor<double> out64(out.shape());
  for (int64_t i = 0; i < out.size(); ++i) out64.data()[i] = double(out.data()[i]);
  return array_from(out64);
}

py::dict params_report(const ModelConfig& cfg) {
  const ParamReport rep = count_params(cfg);
  py::dict rows;
  for (const auto& row : rep.rows) rows[py::str(row.module)] = row.count;
  py::dict out;
  out["total"] = rep.total;
  out["rows"] = rows;
  return out;
}

}  // namespace

PYBIND11_MODULE(_lfdeblur, m) {
  m.doc() = "light field deblurring core";

  py::register_exception<Error>(m, "LfdeblurError");

  py::class_<CameraPose>(m, "CameraPose")
      .def(py::init<>())
      .def_readwrite("tx", &CameraPose::tx)
      .def_readwrite("ty", &CameraPose::ty)
      .def_readwrite("tz", &CameraPose::tz)
      .def_readwrite("rx", &CameraPose::rx)
      .def_readwrite("ry", &CameraPose::ry)
      .def_readwrite("rz", &CameraPose::rz)
      .def("is_identity", &CameraPose::is_identity);

  py::class_<CameraTrajectory>(m, "CameraTrajectory")
      .def(py::init<>())
      .def_readwrite("poses", &CameraTrajectory::poses)
      .def_readwrite("dof", &CameraTrajectory::dof)
      .def_readwrite("baseline", &CameraTrajectory::baseline);

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("views_u", &ModelConfig::views_u)
      .def_readwrite("views_v", &ModelConfig::views_v)
      .def_readwrite("channels", &ModelConfig::channels)
      .def_readwrite("kernel", &ModelConfig::kernel)
      .def_readwrite("gen_hidden", &ModelConfig::gen_hidden)
      .def_readwrite("num_blocks", &ModelConfig::num_blocks)
      .def_readwrite("angular_kernel", &ModelConfig::angular_kernel)
      .def_readwrite("attention_hidden", &ModelConfig::attention_hidden)
      .def_readwrite("use_vasc", &ModelConfig::use_vasc)
      .def_readwrite("use_dpva", &ModelConfig::use_dpva)
      .def_readwrite("use_ape", &ModelConfig::use_ape)
      .def_readwrite("global_residual", &ModelConfig::global_residual)
      .def("n_views", &ModelConfig::n_views)
      .def("validate", &ModelConfig::validate);

  // scene IO: a directory of view_{u:02d}_{v:02d}.png, dense (u, v) grid
  m.def("load_scene", [](const std::string& dir) { return array_from(load_light_field(dir).data()); },
        py::arg("dir"));
  m.def("save_scene",
        [](const DoubleArray& lf, const std::string& dir) { save_light_field(lf_from(lf), dir); },
        py::arg("light_field"), py::arg("dir"));

  // slices
  m.def("sai",
        [](const DoubleArray& lf, int64_t u, int64_t v) { return array_from(lf_from(lf).sai(u, v)); },
        py::arg("light_field"), py::arg("u"), py::arg("v"));
  m.def("micro_lens",
        [](const DoubleArray& lf, int64_t x, int64_t y) {
          return array_from(lf_from(lf).micro_lens(x, y));
        },
        py::arg("light_field"), py::arg("x"), py::arg("y"));
  m.def("epi",
        [](const DoubleArray& lf, const std::string& orientation, int64_t fixed_angular,
           int64_t fixed_spatial) {
          return array_from(epi(lf_from(lf), orientation_from(orientation), fixed_angular, fixed_spatial));
        },
        py::arg("light_field"), py::arg("orientation"), py::arg("fixed_angular"), py::arg("fixed_spatial"));

  // blur synthesis
  m.def("sample_trajectory", &sample_trajectory, py::arg("seed"), py::arg("dof"),
        py::arg("trans_mag"), py::arg("rot_mag"), py::arg("samples"));
  m.def("synthesize_blur",
        [](const DoubleArray& sharp, const CameraTrajectory& traj, double disparity) {
          return array_from(synthesize_blur(lf_from(sharp), traj, disparity).data());
        },
        py::arg("sharp"), py::arg("trajectory"), py::arg("disparity"));

  // metrics
  m.def("psnr",
        [](const DoubleArray& pred, const DoubleArray& gt) {
          return psnr(tensor_from(pred, int(pred.ndim()), "psnr"), tensor_from(gt, int(gt.ndim()), "psnr"));
        },
        py::arg("pred"), py::arg("gt"));
  m.def("ssim_gray",
        [](const DoubleArray& pred, const DoubleArray& gt) { return ssim_gray(image_from(pred), image_from(gt)); },
        py::arg("pred"), py::arg("gt"));
  m.def("ncc",
        [](const DoubleArray& pred, const DoubleArray& gt) {
          return ncc(tensor_from(pred, int(pred.ndim()), "ncc"), tensor_from(gt, int(gt.ndim()), "ncc"));
        },
        py::arg("pred"), py::arg("gt"));
  m.def("lmse_gray",
        [](const DoubleArray& pred, const DoubleArray& gt) { return lmse_gray(image_from(pred), image_from(gt)); },
        py::arg("pred"), py::arg("gt"));
  m.def("evaluate_pair",
        [](const DoubleArray& pred, const DoubleArray& gt) {
          const ViewMetrics v = evaluate_pair(lf_from(pred), lf_from(gt));
          py::dict d;
          d["psnr"] = v.psnr;
          d["ssim"] = v.ssim;
          d["ncc"] = v.ncc;
          d["lmse"] = v.lmse;
          return d;
        },
        py::arg("pred"), py::arg("gt"));

  // model
  m.def("count_params", &params_report, py::arg("config"));
  m.def("checkpoint_config", &peek_checkpoint_config, py::arg("path"));
  m.def("infer", &infer, py::arg("checkpoint"), py::arg("blurred"));
}
