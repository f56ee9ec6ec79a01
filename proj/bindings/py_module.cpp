#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "csod/bench.hpp"
#include "csod/blocks.hpp"
#include "csod/data.hpp"
#include "csod/metrics.hpp"
#include "csod/net.hpp"
#include "csod/ops.hpp"
#include "csod/trainer.hpp"

namespace py = pybind11;
using namespace csod;

namespace {

Tensor to_tensor(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 4) {
        throw py::value_error("expected a rank-4 array shaped (n, c, h, w)");
    }
    Shape s{static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)),
            static_cast<int>(a.shape(2)), static_cast<int>(a.shape(3))};
    Tensor t(s);
    std::memcpy(t.data(), a.data(), sizeof(double) * static_cast<std::size_t>(t.size()));
    return t;
}

py::array_t<double> from_tensor(const Tensor& t) {
    py::array_t<double> a({t.n(), t.c(), t.h(), t.w()});
    std::memcpy(a.mutable_data(), t.data(), sizeof(double) * static_cast<std::size_t>(t.size()));
    return a;
}

using NdArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::dict outputs_to_dict(const ForwardOutputs& out) {
    py::dict d;
    py::list sides;
    for (const Tensor& m : out.side_maps) sides.append(from_tensor(m));
    d["side_maps"] = sides;
    d["final_map"] = from_tensor(out.final_map);
    if (out.edge_map) {
        d["edge_map"] = from_tensor(*out.edge_map);
    } else {
        d["edge_map"] = py::none();
    }
    return d;
}

std::vector<SaliencyPair> to_pairs(const std::vector<std::pair<NdArray, NdArray>>& raw) {
    std::vector<SaliencyPair> pairs;
    pairs.reserve(raw.size());
    for (const auto& [p, g] : raw) pairs.emplace_back(to_tensor(p), to_tensor(g));
    return pairs;
}

ForwardOutputs dict_to_outputs(const py::dict& d) {
    ForwardOutputs out;
    for (auto m : d["side_maps"].cast<py::list>()) out.side_maps.push_back(to_tensor(m.cast<NdArray>()));
    out.final_map = to_tensor(d["final_map"].cast<NdArray>());
    if (!d["edge_map"].is_none()) out.edge_map = to_tensor(d["edge_map"].cast<NdArray>());
    return out;
}

}  // namespace

PYBIND11_MODULE(_csod, m) {
    m.doc() = "salient object detection toolkit: compressed decoder, channel attention, AdaX";

    py::register_exception<ConfigError>(m, "CsodConfigError", PyExc_ValueError);
    py::register_exception<IoError>(m, "CsodIoError", PyExc_IOError);
    py::register_exception<Error>(m, "CsodError", PyExc_RuntimeError);

    // ---- tensor ops ----
    m.def(
        "conv2d",
        [](const NdArray& x, const NdArray& w, const NdArray& b, int stride, int padding) {
            return from_tensor(conv2d(to_tensor(x), to_tensor(w), to_tensor(b), stride, padding));
        },
        py::arg("input"), py::arg("weight"), py::arg("bias"), py::arg("stride") = 1,
        py::arg("padding") = 0);
    m.def("relu", [](const NdArray& x) {
        return from_tensor(pointwise_activation(Act::relu, to_tensor(x)));
    });
    m.def("sigmoid", [](const NdArray& x) {
        return from_tensor(pointwise_activation(Act::sigmoid, to_tensor(x)));
    });
    m.def("maxpool2x2",
          [](const NdArray& x) { return from_tensor(maxpool2x2(to_tensor(x)).out); });
    m.def("upsample_nearest2x",
          [](const NdArray& x) { return from_tensor(upsample_nearest2x(to_tensor(x))); });
    m.def("global_avg_pool",
          [](const NdArray& x) { return from_tensor(global_avg_pool(to_tensor(x))); });
    m.def(
        "bce_loss",
        [](const NdArray& p, const NdArray& t) { return bce_loss(to_tensor(p), to_tensor(t)); },
        py::arg("pred"), py::arg("target"));

    // ---- blocks ----
    py::class_<FireConfig>(m, "FireConfig")
        .def(py::init([](int c_in, int squeeze, int expand1, int expand3) {
                 FireConfig c{c_in, squeeze, expand1, expand3};
                 c.validate();
                 return c;
             }),
             py::arg("c_in"), py::arg("squeeze"), py::arg("expand1"), py::arg("expand3"))
        .def_readonly("c_in", &FireConfig::c_in)
        .def_readonly("squeeze", &FireConfig::squeeze)
        .def_readonly("expand1", &FireConfig::expand1)
        .def_readonly("expand3", &FireConfig::expand3);
    py::class_<SEConfig>(m, "SEConfig")
        .def(py::init([](int channels, int reduction) {
                 SEConfig c{channels, reduction};
                 c.validate();
                 return c;
             }),
             py::arg("channels"), py::arg("reduction") = 4)
        .def_readonly("channels", &SEConfig::channels)
        .def_readonly("reduction", &SEConfig::reduction);

    py::class_<FireBlock>(m, "FireBlock")
        .def(py::init<const FireConfig&>())
        .def("forward", [](FireBlock& b, const NdArray& x) {
            return from_tensor(b.forward(to_tensor(x)));
        });
    py::class_<SEBlock>(m, "SEBlock")
        .def(py::init([](const SEConfig& c, bool residual) {
                 return SEBlock(c, residual ? SEBlock::Fuse::scale_residual
                                            : SEBlock::Fuse::scale_only);
             }),
             py::arg("config"), py::arg("residual") = true)
        .def("forward", [](SEBlock& b, const NdArray& x) {
            return from_tensor(b.forward(to_tensor(x)));
        });

    m.def("fire_param_count",
          [](const FireConfig& c) { return fire_param_count(c).total(); });
    m.def("se_param_count", [](const SEConfig& c) { return se_param_count(c).total(); });
    m.def("plain_param_count",
          [](int c_in, int c_out) { return plain_param_count(c_in, c_out).total(); });

    // ---- network ----
    py::class_<NetConfig>(m, "NetConfig")
        .def(py::init([](int stages, std::vector<int> stage_channels, const std::string& decoder,
                         bool se_enabled, bool edge_branch, int input_size) {
                 NetConfig c;
                 c.stages = stages;
                 c.stage_channels = std::move(stage_channels);
                 c.decoder =
                     decoder == "plain" ? NetConfig::Decoder::plain : NetConfig::Decoder::fire;
                 c.se_enabled = se_enabled;
                 c.edge_branch = edge_branch;
                 c.input_size = input_size;
                 c.validate();
                 return c;
             }),
             py::arg("stages") = 4,
             py::arg("stage_channels") = std::vector<int>{16, 32, 64, 128},
             py::arg("decoder") = "fire", py::arg("se_enabled") = true,
             py::arg("edge_branch") = true, py::arg("input_size") = 64)
        .def_readonly("stages", &NetConfig::stages)
        .def_readonly("stage_channels", &NetConfig::stage_channels)
        .def_readonly("input_size", &NetConfig::input_size)
        .def("serialize", &NetConfig::serialize);

    py::class_<SodNet>(m, "SodNet")
        .def(py::init<const NetConfig&, std::uint64_t>(), py::arg("config"), py::arg("seed") = 0)
        .def("forward",
             [](SodNet& n, const NdArray& images) {
                 return outputs_to_dict(n.forward(to_tensor(images)));
             })
        .def("backward",
             [](SodNet& n, const NdArray& mask, const NdArray& edge) {
                 return n.backward(to_tensor(mask), to_tensor(edge));
             },
             py::arg("mask"), py::arg("edge"))
        .def("zero_grad", &SodNet::zero_grad)
        .def("param_count", [](const SodNet& n) { return n.param_count().total(); })
        .def("decoder_core_param_count",
             [](const SodNet& n) { return n.decoder_core_param_count().total(); })
        .def_property_readonly("config", &SodNet::config);

    m.def("total_loss", [](const py::dict& outputs, const NdArray& mask, const NdArray& edge) {
        return total_loss(dict_to_outputs(outputs), to_tensor(mask), to_tensor(edge));
    });
    m.def("decoder_param_ratio", &decoder_param_ratio);
    m.def("save_checkpoint",
          [](const SodNet& net, const std::string& path) { save_checkpoint(net, path); });
    m.def("load_checkpoint", [](const std::string& path) { return load_checkpoint(path); });

    // ---- optimizers ----
    py::class_<Optimizer>(m, "Optimizer")
        .def(py::init([](SodNet& net, const std::string& algorithm, double alpha, double beta1,
                         double beta2, double eps, double weight_decay, double momentum) {
                 OptimizerConfig cfg;
                 cfg.algorithm = algo_from_name(algorithm);
                 cfg.alpha = alpha;
                 cfg.beta1 = beta1;
                 cfg.beta2 = beta2;
                 cfg.eps = eps;
                 cfg.weight_decay = weight_decay;
                 cfg.momentum = momentum;
                 return Optimizer(cfg, net.params());
             }),
             py::arg("net"), py::arg("algorithm") = "adax", py::arg("alpha") = 5e-5,
             py::arg("beta1") = 0.9, py::arg("beta2") = -1.0, py::arg("eps") = 1e-8,
             py::arg("weight_decay") = 5e-4, py::arg("momentum") = 0.0,
             py::keep_alive<1, 2>())
        .def("step", &Optimizer::step)
        .def("zero_grad", &Optimizer::zero_grad)
        .def("set_alpha", &Optimizer::set_alpha);

    m.def("schedule_lr", &schedule_lr, py::arg("base_alpha"), py::arg("epoch"),
          py::arg("total_epochs"));
    m.def(
        "train_step",
        [](Optimizer& opt, SodNet& net, const NdArray& image, const NdArray& mask,
           const NdArray& edge) {
            SampleRecord rec;
            rec.image = to_tensor(image);
            rec.mask = to_tensor(mask);
            rec.edge = to_tensor(edge);
            std::vector<const SampleRecord*> micro{&rec};
            return accumulate_and_step(opt, net, micro);
        },
        py::arg("optimizer"), py::arg("net"), py::arg("image"), py::arg("mask"), py::arg("edge"));

    // ---- metrics ----
    m.def("max_f_measure", [](const std::vector<std::pair<NdArray, NdArray>>& raw) {
        return max_f_measure(to_pairs(raw));
    });
    m.def("mae",
          [](const std::vector<std::pair<NdArray, NdArray>>& raw) { return mae(to_pairs(raw)); });
    m.def(
        "iou",
        [](const std::vector<std::pair<NdArray, NdArray>>& raw, double thr) {
            return iou(to_pairs(raw), thr);
        },
        py::arg("pairs"), py::arg("threshold") = 0.5);
    m.def("s_measure", [](const std::vector<std::pair<NdArray, NdArray>>& raw) {
        return s_measure(to_pairs(raw));
    });
    m.def("evaluate", [](const std::vector<std::pair<NdArray, NdArray>>& raw) {
        MetricsReport r = evaluate(to_pairs(raw));
        py::dict d;
        d["max_f"] = r.max_f;
        d["mae"] = r.mae;
        d["iou"] = r.iou;
        d["s_measure"] = r.s_measure;
        py::array_t<double> curve({static_cast<py::ssize_t>(r.pr_curve.size()), py::ssize_t(3)});
        auto buf = curve.mutable_unchecked<2>();
        for (std::size_t i = 0; i < r.pr_curve.size(); ++i) {
            buf(static_cast<py::ssize_t>(i), 0) = r.pr_curve[i].threshold;
            buf(static_cast<py::ssize_t>(i), 1) = r.pr_curve[i].precision;
            buf(static_cast<py::ssize_t>(i), 2) = r.pr_curve[i].recall;
        }
        d["pr_curve"] = curve;
        return d;
    });

    // ---- data ----
    m.def(
        "generate_sample",
        [](std::uint64_t seed, int size) {
            SampleRecord r = generate_sample(seed, size);
            return py::make_tuple(from_tensor(r.image), from_tensor(r.mask), from_tensor(r.edge));
        },
        py::arg("seed"), py::arg("size"));
    m.def("edge_from_mask",
          [](const NdArray& m_) { return from_tensor(edge_from_mask(to_tensor(m_))); });
    m.def("write_image",
          [](const std::string& path, const NdArray& t) { write_image(path, to_tensor(t)); });
    m.def("read_image", [](const std::string& path) { return from_tensor(read_image(path)); });
    m.def(
        "generate_dataset",
        [](std::uint64_t seed, int size, int train_count, int test_count,
           const std::string& root) {
            GeneratedDataset d = generate_dataset(seed, size, train_count, test_count, root);
            return py::make_tuple(d.train.count(), d.test.count());
        },
        py::arg("seed"), py::arg("size"), py::arg("train_count"), py::arg("test_count"),
        py::arg("root"));

    // ---- optimizer benchmark ----
    m.def(
        "optbench",
        [](const std::string& task, int iterations, std::uint64_t seed) {
            BenchResult r = optbench(task, iterations, seed);
            py::dict d;
            d["task"] = r.task;
            d["algorithms"] = r.algorithms;
            py::array_t<double> traces(
                {static_cast<py::ssize_t>(r.traces.size()),
                 static_cast<py::ssize_t>(r.traces.empty() ? 0 : r.traces[0].size())});
            auto buf = traces.mutable_unchecked<2>();
            for (std::size_t a = 0; a < r.traces.size(); ++a) {
                for (std::size_t i = 0; i < r.traces[a].size(); ++i) {
                    buf(static_cast<py::ssize_t>(a), static_cast<py::ssize_t>(i)) = r.traces[a][i];
                }
            }
            d["traces"] = traces;
            return d;
        },
        py::arg("task"), py::arg("iterations"), py::arg("seed") = 7);
}
