#include "csod/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "csod/rng.hpp"

namespace fs = std::filesystem;

namespace csod {

namespace {

// bilinear value noise over a coarse random lattice
struct ValueNoise {
    int cells;
    std::vector<double> lattice;  // (cells+1)^2

    ValueNoise(Rng& rng, int cells_, double lo, double hi) : cells(cells_) {
        lattice.resize(static_cast<std::size_t>((cells + 1) * (cells + 1)));
        for (auto& v : lattice) v = rng.uniform(lo, hi);
    }

    double operator()(double u, double v) const {  // u,v in [0,1]
        const double gu = u * cells, gv = v * cells;
        const int x0 = std::min(static_cast<int>(gu), cells - 1);
        const int y0 = std::min(static_cast<int>(gv), cells - 1);
        const double fu = gu - x0, fv = gv - y0;
        auto at = [&](int x, int y) { return lattice[static_cast<std::size_t>(y * (cells + 1) + x)]; };
        const double a = at(x0, y0) * (1 - fu) + at(x0 + 1, y0) * fu;
        const double b = at(x0, y0 + 1) * (1 - fu) + at(x0 + 1, y0 + 1) * fu;
        return a * (1 - fv) + b * fv;
    }
};

struct FgShape {
    enum class Kind { ellipse, rectangle, triangle };
    Kind kind;
    // ellipse: (p0,p1)=center, (p2,p3)=radii; rectangle: corners;
    // triangle: three vertices in p[0..5]
    double p[6];

    bool contains(double x, double y) const {
        switch (kind) {
            case Kind::ellipse: {
                const double dx = (x - p[0]) / p[2];
                const double dy = (y - p[1]) / p[3];
                return dx * dx + dy * dy <= 1.0;
            }
            case Kind::rectangle:
                return x >= p[0] && x <= p[2] && y >= p[1] && y <= p[3];
            case Kind::triangle: {
                auto side = [&](double ax, double ay, double bx, double by) {
                    return (bx - ax) * (y - ay) - (by - ay) * (x - ax);
                };
                const double d1 = side(p[0], p[1], p[2], p[3]);
                const double d2 = side(p[2], p[3], p[4], p[5]);
                const double d3 = side(p[4], p[5], p[0], p[1]);
                const bool neg = d1 < 0 || d2 < 0 || d3 < 0;
                const bool pos = d1 > 0 || d2 > 0 || d3 > 0;
                return !(neg && pos);
            }
        }
        return false;
    }
};

// saturated palette: foreground colors stay far from the muted background
constexpr double kPalette[8][3] = {
    {0.97, 0.03, 0.03}, {0.03, 0.93, 0.06}, {0.05, 0.15, 0.97}, {0.97, 0.90, 0.03},
    {0.95, 0.05, 0.95}, {0.03, 0.92, 0.95}, {0.97, 0.55, 0.02}, {0.55, 0.03, 0.97},
};

std::vector<FgShape> sample_shapes(Rng& rng, int size) {
    const int count = rng.uniform_int(1, 3);
    std::vector<FgShape> shapes;
    const double s = static_cast<double>(size);
    for (int i = 0; i < count; ++i) {
        FgShape sh;
        const int kind = rng.uniform_int(0, 2);
        const double cx = rng.uniform(0.25, 0.75) * s;
        const double cy = rng.uniform(0.25, 0.75) * s;
        const double rx = rng.uniform(0.18, 0.34) * s;
        const double ry = rng.uniform(0.18, 0.34) * s;
        switch (kind) {
            case 0:
                sh.kind = FgShape::Kind::ellipse;
                sh.p[0] = cx; sh.p[1] = cy; sh.p[2] = rx; sh.p[3] = ry;
                break;
            case 1:
                sh.kind = FgShape::Kind::rectangle;
                sh.p[0] = cx - rx; sh.p[1] = cy - ry; sh.p[2] = cx + rx; sh.p[3] = cy + ry;
                break;
            default: {
                sh.kind = FgShape::Kind::triangle;
                for (int v = 0; v < 3; ++v) {
                    const double ang = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
                    const double rad = rng.uniform(0.6, 1.0) * std::max(rx, ry);
                    sh.p[2 * v] = cx + rad * std::cos(ang);
                    sh.p[2 * v + 1] = cy + rad * std::sin(ang);
                }
                break;
            }
        }
        shapes.push_back(sh);
    }
    return shapes;
}

Tensor raster_mask(const std::vector<FgShape>& shapes, int size) {
    Tensor mask(Shape{1, 1, size, size});
    double* m = mask.data();
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            for (const auto& sh : shapes) {
                if (sh.contains(px, py)) {
                    m[y * size + x] = 1.0;
                    break;
                }
            }
        }
    }
    return mask;
}

}  // namespace

SampleRecord generate_sample(std::uint64_t seed, int size) {
    check(size >= 16, "generate_sample: size must be >= 16, got ", size);
    Rng rng(seed);

    // keep the salient fraction away from degenerate extremes
    std::vector<FgShape> shapes;
    Tensor mask;
    double frac = 0.0;
    for (int attempt = 0; attempt < 200; ++attempt) {
        shapes = sample_shapes(rng, size);
        mask = raster_mask(shapes, size);
        double fg = 0.0;
        for (std::int64_t i = 0; i < mask.size(); ++i) fg += mask[i];
        frac = fg / static_cast<double>(mask.size());
        if (frac >= 0.05 && frac <= 0.6) break;
    }
    check(frac >= 0.05 && frac <= 0.6,
          "generate_sample: could not hit a usable foreground fraction for seed ", seed);

    // muted low-frequency background shared across channels, small color cast
    ValueNoise noise(rng, 3, 0.35, 0.65);
    double cast[3];
    for (double& c : cast) c = rng.uniform(-0.04, 0.04);

    // distinct mean color per shape, rotating through the palette
    const int palette_start = rng.uniform_int(0, 7);
    std::vector<int> shape_color(shapes.size());
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        shape_color[i] = (palette_start + static_cast<int>(i)) % 8;
    }

    Tensor image(Shape{1, 3, size, size});
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double px = x + 0.5, py = y + 0.5;
            int owner = -1;
            for (std::size_t si = 0; si < shapes.size(); ++si) {
                if (shapes[si].contains(px, py)) owner = static_cast<int>(si);
            }
            const double lum = noise(static_cast<double>(x) / size, static_cast<double>(y) / size);
            for (int c = 0; c < 3; ++c) {
                double v = owner >= 0 ? kPalette[shape_color[static_cast<std::size_t>(owner)]][c]
                                      : lum + cast[c];
                image.at(0, c, y, x) = v;
            }
        }
    }
    // light pixel noise, then clamp back into [0,1]
    for (std::int64_t i = 0; i < image.size(); ++i) {
        image[i] = std::clamp(image[i] + rng.normal(0.0, 0.02), 0.0, 1.0);
    }

    SampleRecord rec;
    rec.image = std::move(image);
    rec.edge = edge_from_mask(mask);
    rec.mask = std::move(mask);
    rec.seed = seed;
    return rec;
}

Tensor edge_from_mask(const Tensor& mask) {
    check(mask.n() == 1 && mask.c() == 1, "edge_from_mask: expected a (1,1,h,w) mask, got ",
          mask.shape().str());
    const int h = mask.h(), w = mask.w();
    for (std::int64_t i = 0; i < mask.size(); ++i) {
        check(mask[i] == 0.0 || mask[i] == 1.0, "edge_from_mask: mask value ", mask[i],
              " is not binary");
    }
    Tensor edge(mask.shape());
    const double* m = mask.data();
    auto at = [&](int y, int x) {
        // replicate-edge border handling
        y = std::clamp(y, 0, h - 1);
        x = std::clamp(x, 0, w - 1);
        return m[y * w + x];
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double lo = 1.0, hi = 0.0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const double v = at(y + dy, x + dx);
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
            }
            edge.at(0, 0, y, x) = hi - lo;  // dilation minus erosion
        }
    }
    return edge;
}

// ---- netpbm ------------------------------------------------------------------

void write_image(const std::string& path, const Tensor& t) {
    check(t.n() == 1 && (t.c() == 1 || t.c() == 3),
          "write_image: expected a (1,1,h,w) or (1,3,h,w) tensor, got ", t.shape().str());
    for (std::int64_t i = 0; i < t.size(); ++i) {
        check(t[i] >= 0.0 && t[i] <= 1.0, "write_image: value ", t[i], " outside [0,1]");
    }
    const int h = t.h(), w = t.w(), c = t.c();
    std::string buf;
    buf += c == 1 ? "P5" : "P6";
    buf += "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    auto quant = [](double v) {
        return static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int ch = 0; ch < c; ++ch) buf += quant(t.at(0, ch, y, x));
        }
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    check<IoError>(f.good(), "cannot open image for writing: ", path);
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    f.flush();
    check<IoError>(f.good(), "failed writing image: ", path);
}

namespace {

// single whitespace-separated header token
std::string next_token(const std::string& data, std::size_t& pos, const std::string& path) {
    while (pos < data.size() && std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    check<IoError>(pos > start, "truncated netpbm header in ", path);
    return data.substr(start, pos - start);
}

int header_int(const std::string& tok, const std::string& what, const std::string& path) {
    for (char ch : tok) {
        check<IoError>(ch >= '0' && ch <= '9', "bad ", what, " '", tok, "' in ", path);
    }
    check<IoError>(tok.size() <= 7, "dimension overflow: ", what, " '", tok, "' in ", path);
    return std::stoi(tok);
}

}  // namespace

Tensor read_image(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    check<IoError>(f.good(), "cannot open image: ", path);
    std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    std::size_t pos = 0;
    const std::string magic = next_token(data, pos, path);
    check<IoError>(magic == "P5" || magic == "P6", "bad magic '", magic, "' in ", path,
                   " (expected binary P5 or P6)");
    const int channels = magic == "P5" ? 1 : 3;
    const int w = header_int(next_token(data, pos, path), "width", path);
    const int h = header_int(next_token(data, pos, path), "height", path);
    check<IoError>(w >= 1 && h >= 1 && w <= 32768 && h <= 32768,
                   "dimension overflow: ", w, "x", h, " in ", path);
    const int maxval = header_int(next_token(data, pos, path), "maxval", path);
    check<IoError>(maxval == 255, "unsupported maxval ", maxval, " in ", path);
    check<IoError>(pos < data.size() && std::isspace(static_cast<unsigned char>(data[pos])),
                   "missing header terminator in ", path);
    ++pos;  // exactly one whitespace byte before the payload

    const std::int64_t need = static_cast<std::int64_t>(w) * h * channels;
    check<IoError>(static_cast<std::int64_t>(data.size() - pos) >= need,
                   "truncated payload in ", path, ": need ", need, " bytes, have ",
                   data.size() - pos);
    Tensor t(Shape{1, channels, h, w});
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int ch = 0; ch < channels; ++ch) {
                const unsigned char b = static_cast<unsigned char>(data[pos++]);
                t.at(0, ch, y, x) = static_cast<double>(b) / 255.0;
            }
        }
    }
    return t;
}

// ---- dataset -----------------------------------------------------------------

const char* split_name(DatasetManifest::Split s) {
    return s == DatasetManifest::Split::train ? "train" : "test";
}

namespace {

DatasetManifest write_split(std::uint64_t seed, int size, std::int64_t first_id, int count,
                            const std::string& root, DatasetManifest::Split split) {
    DatasetManifest m;
    m.root = root;
    m.size = size;
    m.split = split;
    std::ostringstream manifest;
    for (int i = 0; i < count; ++i) {
        const std::int64_t id = first_id + i;
        SampleRecord rec = generate_sample(mix_seed(seed, static_cast<std::uint64_t>(id)), size);
        rec.id = id;
        DatasetManifest::Entry e;
        e.id = id;
        e.img = cat("img_", id, ".ppm");
        e.msk = cat("msk_", id, ".pgm");
        e.edg = cat("edg_", id, ".pgm");
        write_image(root + "/" + e.img, rec.image);
        write_image(root + "/" + e.msk, rec.mask);
        write_image(root + "/" + e.edg, rec.edge);
        manifest << id << "\t" << e.img << "\t" << e.msk << "\t" << e.edg << "\n";
        m.entries.push_back(std::move(e));
    }
    const std::string mpath = root + "/" + cat("manifest_", split_name(split), ".txt");
    std::ofstream f(mpath, std::ios::trunc);
    check<IoError>(f.good(), "cannot open manifest for writing: ", mpath);
    f << manifest.str();
    f.flush();
    check<IoError>(f.good(), "failed writing manifest: ", mpath);
    return m;
}

}  // namespace

GeneratedDataset generate_dataset(std::uint64_t seed, int size, int train_count, int test_count,
                                  const std::string& root) {
    check(train_count >= 0 && test_count >= 0 && train_count + test_count > 0,
          "generate_dataset: need at least one sample");
    std::error_code ec;
    fs::create_directories(root, ec);
    check<IoError>(!ec, "cannot create dataset root ", root, ": ", ec.message());
    GeneratedDataset d;
    d.train = write_split(seed, size, 0, train_count, root, DatasetManifest::Split::train);
    d.test = write_split(seed, size, train_count, test_count, root, DatasetManifest::Split::test);
    return d;
}

DatasetManifest load_manifest(const std::string& root, DatasetManifest::Split split) {
    const std::string mpath = root + "/" + cat("manifest_", split_name(split), ".txt");
    std::ifstream f(mpath);
    check<IoError>(f.good(), "cannot open manifest: ", mpath);
    DatasetManifest m;
    m.root = root;
    m.split = split;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream is(line);
        DatasetManifest::Entry e;
        check<IoError>(static_cast<bool>(is >> e.id >> e.img >> e.msk >> e.edg),
                       "bad manifest line '", line, "' in ", mpath);
        for (const std::string* name : {&e.img, &e.msk, &e.edg}) {
            check<IoError>(fs::exists(root + "/" + *name), "manifest entry ", e.id,
                           " references a missing file: ", *name);
        }
        m.entries.push_back(std::move(e));
    }
    return m;
}

SampleRecord load_sample(const DatasetManifest& manifest, const DatasetManifest::Entry& entry) {
    SampleRecord rec;
    rec.id = entry.id;
    rec.image = read_image(manifest.root + "/" + entry.img);
    rec.mask = read_image(manifest.root + "/" + entry.msk);
    rec.edge = read_image(manifest.root + "/" + entry.edg);
    check<IoError>(rec.image.c() == 3, "sample ", entry.id, ": image is not 3-channel");
    for (const Tensor* t : {&rec.mask, &rec.edge}) {
        check<IoError>(t->c() == 1, "sample ", entry.id, ": mask/edge is not single-channel");
        for (std::int64_t i = 0; i < t->size(); ++i) {
            check<IoError>((*t)[i] == 0.0 || (*t)[i] == 1.0, "sample ", entry.id,
                           ": mask/edge byte is not strictly binary");
        }
    }
    if (manifest.size > 0) {
        check<IoError>(rec.image.h() == manifest.size && rec.image.w() == manifest.size,
                       "sample ", entry.id, ": unexpected resolution");
    }
    return rec;
}

std::vector<SampleRecord> load_split(const DatasetManifest& manifest) {
    std::vector<SampleRecord> out;
    out.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) out.push_back(load_sample(manifest, e));
    return out;
}

}  // namespace csod
