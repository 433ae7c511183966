#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "eegad/nn/graph.hpp"
#include "eegad/segment.hpp"

namespace eegad::nn {

// Architecture of the two-branch feature extractor: a residual temporal-conv
// backbone (1 x main_kernel kernels, stride on the time axis only) plus a
// single K x 7 conv branch from the stem output; the pooled outputs of both
// branches concatenate into the feature vector feeding the 3-class head.
struct ArchConfig {
    std::size_t in_channels = 4;  // K
    std::size_t in_length = 256;  // L
    std::size_t main_kernel = 7;  // ablation value 3
    std::vector<std::size_t> stage_depths{3, 4, 6, 3};
    std::vector<std::size_t> stage_widths{64, 128, 256, 512};
    std::size_t time_stride = 2;  // first block of every stage after the first
    bool branch_enabled = true;
    std::size_t branch_width = 32;
    std::size_t branch_kernel_w = 7;
    std::size_t n_classes = 3;

    static ArchConfig tiny(std::size_t K, std::size_t L) {
        ArchConfig a;
        a.in_channels = K;
        a.in_length = L;
        a.stage_depths = {1, 1};
        a.stage_widths = {16, 32};
        return a;
    }

    static ArchConfig full(std::size_t K, std::size_t L) {
        ArchConfig a;
        a.in_channels = K;
        a.in_length = L;
        return a;
    }

    std::size_t feature_dim() const {
        return stage_widths.back() + (branch_enabled ? branch_width : 0);
    }

    void validate() const {
        if (in_channels == 0 || in_length == 0) throw ConfigError("arch: empty input shape");
        if (main_kernel % 2 == 0) throw ConfigError("arch: main_kernel must be odd");
        if (stage_depths.size() != stage_widths.size() || stage_depths.empty()) {
            throw ConfigError("arch: stage_depths and stage_widths must match and be nonempty");
        }
        if (n_classes != 3) throw ConfigError("arch: n_classes must be 3");
        if (time_stride == 0) throw ConfigError("arch: time_stride must be positive");
    }
};

template <typename T>
struct Param {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> m, v2;  // Adam moments
    bool no_decay = false;
};

template <typename T>
class TwoBranchModel {
public:
    ArchConfig arch;
    std::vector<Param<T>> params;
    std::vector<BnState<T>> bn_states;
    std::vector<std::string> bn_names;  // parallel to bn_states, for serialization
    std::int64_t adam_t = 0;

    struct ConvSpec {
        std::size_t w = 0, b = 0;          // param indices
        std::size_t sh = 1, sw = 1, ph = 0, pw = 0;
    };
    struct BnSpec {
        std::size_t gamma = 0, beta = 0, state = 0;
    };
    struct BlockSpec {
        ConvSpec c1;
        BnSpec b1;
        ConvSpec c2;
        BnSpec b2;
        bool has_proj = false;
        ConvSpec pc;
        BnSpec pb;
    };

    ConvSpec stem_conv;
    BnSpec stem_bn;
    std::vector<BlockSpec> blocks;
    ConvSpec branch_conv;
    BnSpec branch_bn;
    std::size_t fc_w = 0, fc_b = 0;

    static TwoBranchModel build(const ArchConfig& cfg, RandomSource& rng);

    struct Forward {
        NodePtr<T> logits;
        NodePtr<T> features;      // B x d, the blue-box output
        NodePtr<T> main_prepool;  // main branch activations before pooling
        std::vector<std::pair<std::size_t, NodePtr<T>>> leaves;
    };

    // Records a graph when train==true (batch-norm batch statistics, running
    // stats updated); eval mode is a pure function of (parameters, input).
    Forward forward(const Tensor<T>& batch, bool train);

    Tensor<T> logits_eval(const Tensor<T>& batch) {
        return forward(batch, false).logits->val;
    }
    Tensor<T> features_eval(const Tensor<T>& batch) {
        return forward(batch, false).features->val;
    }

    // Feature vector of one segment (the classifier head removed).
    std::vector<T> extract_features(const EegSegment& seg);

    // Adds every leaf gradient into the owning parameter's grad buffer; call
    // once after backward().
    void accumulate_leaf_grads(Forward& f) {
        for (auto& [idx, leaf] : f.leaves) {
            if (leaf->grad.v.empty()) continue;
            auto& g = params[idx].grad;
            if (g.v.empty()) g = Tensor<T>::zeros_like(params[idx].value);
            for (std::size_t i = 0; i < g.v.size(); ++i) g.v[i] += leaf->grad.v[i];
        }
    }

    void zero_grads() {
        for (auto& p : params) {
            if (!p.grad.v.empty()) std::fill(p.grad.v.begin(), p.grad.v.end(), T(0));
        }
    }

    std::size_t num_params() const {
        std::size_t n = 0;
        for (const auto& p : params) n += p.value.numel();
        return n;
    }

    void save(const std::filesystem::path& path,
              const std::map<std::string, std::vector<float>>& extras = {}) const;
    static TwoBranchModel load(const std::filesystem::path& path,
                               std::map<std::string, std::vector<float>>* extras = nullptr);

private:
    std::size_t add_param(const std::string& name, std::vector<std::size_t> shape,
                          bool no_decay = false) {
        Param<T> p;
        p.name = name;
        p.value = Tensor<T>(std::move(shape));
        p.no_decay = no_decay;
        params.push_back(std::move(p));
        return params.size() - 1;
    }

    std::size_t add_bn_state(const std::string& prefix, std::size_t c) {
        BnState<T> s;
        s.running_mean = Tensor<T>({c});
        s.running_var = Tensor<T>({c});
        std::fill(s.running_var.v.begin(), s.running_var.v.end(), T(1));
        bn_states.push_back(std::move(s));
        bn_names.push_back(prefix);
        return bn_states.size() - 1;
    }

    ConvSpec make_conv(const std::string& prefix, std::size_t oc, std::size_t ic, std::size_t kh,
                       std::size_t kw, std::size_t sw, std::size_t pw) {
        ConvSpec c;
        c.w = add_param(prefix + ".w", {oc, ic, kh, kw});
        c.b = add_param(prefix + ".b", {oc});
        c.sh = 1;
        c.sw = sw;
        c.ph = 0;
        c.pw = pw;
        return c;
    }

    BnSpec make_bn(const std::string& prefix, std::size_t c) {
        BnSpec b;
        b.gamma = add_param(prefix + ".gamma", {c}, /*no_decay=*/true);
        b.beta = add_param(prefix + ".beta", {c}, /*no_decay=*/true);
        b.state = add_bn_state(prefix, c);
        return b;
    }
};

template <typename T>
TwoBranchModel<T> TwoBranchModel<T>::build(const ArchConfig& cfg, RandomSource& rng) {
    cfg.validate();
    TwoBranchModel mdl;
    mdl.arch = cfg;

    const std::size_t K = cfg.in_channels;
    const std::size_t mk = cfg.main_kernel;
    const std::size_t w0 = cfg.stage_widths.front();

    mdl.stem_conv = mdl.make_conv("stem.conv", w0, 1, 1, 7, 2, 3);
    mdl.stem_bn = mdl.make_bn("stem.bn", w0);

    std::size_t in_w = w0;
    for (std::size_t s = 0; s < cfg.stage_depths.size(); ++s) {
        const std::size_t out_w = cfg.stage_widths[s];
        for (std::size_t i = 0; i < cfg.stage_depths[s]; ++i) {
            const std::size_t stride = (i == 0 && s > 0) ? cfg.time_stride : 1;
            const std::string prefix =
                "stage" + std::to_string(s) + ".block" + std::to_string(i);
            BlockSpec blk;
            blk.c1 = mdl.make_conv(prefix + ".conv1", out_w, in_w, 1, mk, stride, (mk - 1) / 2);
            blk.b1 = mdl.make_bn(prefix + ".bn1", out_w);
            blk.c2 = mdl.make_conv(prefix + ".conv2", out_w, out_w, 1, mk, 1, (mk - 1) / 2);
            blk.b2 = mdl.make_bn(prefix + ".bn2", out_w);
            blk.has_proj = (stride != 1 || in_w != out_w);
            if (blk.has_proj) {
                blk.pc = mdl.make_conv(prefix + ".proj", out_w, in_w, 1, 1, stride, 0);
                blk.pb = mdl.make_bn(prefix + ".projbn", out_w);
            }
            mdl.blocks.push_back(blk);
            in_w = out_w;
        }
    }

    if (cfg.branch_enabled) {
        mdl.branch_conv = mdl.make_conv("branch.conv", cfg.branch_width, w0, K,
                                        cfg.branch_kernel_w, 1, (cfg.branch_kernel_w - 1) / 2);
        mdl.branch_bn = mdl.make_bn("branch.bn", cfg.branch_width);
    }

    mdl.fc_w = mdl.add_param("fc.w", {cfg.n_classes, cfg.feature_dim()});
    mdl.fc_b = mdl.add_param("fc.b", {cfg.n_classes});

    // He-uniform for conv / fc weights, zeros for biases, unit scale and zero
    // shift for batch norm. Draw order is registration order.
    for (auto& p : mdl.params) {
        const bool is_weight = p.name.size() > 2 && p.name.rfind(".w") == p.name.size() - 2;
        const bool is_gamma = p.name.rfind(".gamma") != std::string::npos;
        if (is_weight) {
            std::size_t fan_in = 1;
            for (std::size_t i = 1; i < p.value.ndim(); ++i) fan_in *= p.value.dim(i);
            const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
            for (auto& v : p.value.v) v = static_cast<T>(rng.uniform(-bound, bound));
        } else if (is_gamma) {
            std::fill(p.value.v.begin(), p.value.v.end(), T(1));
        }
        // biases and beta stay zero
    }

    // Shape check: walk the time axis through the network.
    std::size_t W = (cfg.in_length + 2 * 3 - 7) / 2 + 1;  // stem
    for (std::size_t s = 0; s < cfg.stage_depths.size(); ++s) {
        if (s > 0) {
            if (W + 2 * ((mk - 1) / 2) < mk) throw ConfigError("arch: kernel larger than input");
            W = (W + 2 * ((mk - 1) / 2) - mk) / cfg.time_stride + 1;
        }
        if (W == 0) throw ConfigError("arch: time axis collapsed to zero");
    }
    if (cfg.in_length + 6 < 7) throw ConfigError("arch: input shorter than stem kernel");

    return mdl;
}

template <typename T>
typename TwoBranchModel<T>::Forward TwoBranchModel<T>::forward(const Tensor<T>& batch,
                                                               bool train) {
    if (batch.ndim() != 4 || batch.dim(1) != 1 || batch.dim(2) != arch.in_channels ||
        batch.dim(3) != arch.in_length) {
        throw DataError("forward: batch shape does not match architecture input");
    }

    Forward f;
    auto x = make_input(batch, false);

    auto leaf = [&](std::size_t idx) {
        auto n = make_input(params[idx].value, train);
        f.leaves.push_back({idx, n});
        return n;
    };
    auto conv = [&](const NodePtr<T>& in, const ConvSpec& c) {
        return conv2d(in, leaf(c.w), leaf(c.b), c.sh, c.sw, c.ph, c.pw);
    };
    auto bn = [&](const NodePtr<T>& in, const BnSpec& b) {
        return batchnorm(in, leaf(b.gamma), leaf(b.beta), &bn_states[b.state], train);
    };

    auto stem = relu(bn(conv(x, stem_conv), stem_bn));

    auto h = stem;
    for (const auto& blk : blocks) {
        auto y = relu(bn(conv(h, blk.c1), blk.b1));
        y = bn(conv(y, blk.c2), blk.b2);
        auto sc = blk.has_proj ? bn(conv(h, blk.pc), blk.pb) : h;
        h = relu(add(y, sc));
    }
    f.main_prepool = h;
    auto feat = global_avg_pool(h);

    if (arch.branch_enabled) {
        auto bfeat = global_avg_pool(relu(bn(conv(stem, branch_conv), branch_bn)));
        feat = concat_features(feat, bfeat);
    }
    f.features = feat;
    f.logits = linear(feat, leaf(fc_w), leaf(fc_b));
    return f;
}

template <typename T>
std::vector<T> TwoBranchModel<T>::extract_features(const EegSegment& seg) {
    if (seg.channels() != arch.in_channels || seg.length() != arch.in_length) {
        throw DataError("extract_features: segment shape does not match architecture input");
    }
    Tensor<T> batch({1, 1, arch.in_channels, arch.in_length});
    for (std::size_t i = 0; i < batch.numel(); ++i) {
        batch.v[i] = static_cast<T>(seg.data.values()[i]);
    }
    auto out = features_eval(batch);
    return out.v;
}

// ---------------------------------------------------------------------------
// TBM1 serialization: magic, ArchConfig, then named f32 tensor records for
// every parameter and batch-norm running statistic.
// ---------------------------------------------------------------------------
namespace tbm_detail {

template <typename U>
void put(std::string& out, U v) {
    char buf[sizeof(U)];
    std::memcpy(buf, &v, sizeof(U));
    out.append(buf, sizeof(U));
}

template <typename U>
U get(const std::string& in, std::size_t& off) {
    if (off + sizeof(U) > in.size()) throw DataError("TBM1: truncated file");
    U v;
    std::memcpy(&v, in.data() + off, sizeof(U));
    off += sizeof(U);
    return v;
}

inline void put_record(std::string& out, const std::string& name,
                       const std::vector<std::size_t>& shape, const std::vector<float>& vals) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.append(name);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(shape.size()));
    for (auto d : shape) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (float v : vals) put<float>(out, v);
}

}  // namespace tbm_detail

template <typename T>
void TwoBranchModel<T>::save(const std::filesystem::path& path,
                             const std::map<std::string, std::vector<float>>& extras) const {
    using namespace tbm_detail;
    std::string out;
    out.append("TBM1", 4);
    put<std::uint16_t>(out, 1);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(arch.in_channels));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(arch.in_length));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(arch.main_kernel));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(arch.stage_depths.size()));
    for (std::size_t s = 0; s < arch.stage_depths.size(); ++s) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(arch.stage_depths[s]));
        put<std::uint32_t>(out, static_cast<std::uint32_t>(arch.stage_widths[s]));
    }
    put<std::uint32_t>(out, static_cast<std::uint32_t>(arch.time_stride));
    put<std::uint8_t>(out, arch.branch_enabled ? 1 : 0);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(arch.branch_width));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(arch.branch_kernel_w));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(arch.n_classes));

    const std::size_t n_records = params.size() + 2 * bn_states.size() + extras.size();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(n_records));
    auto to_f32 = [](const Tensor<T>& t) {
        std::vector<float> v(t.numel());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(t.v[i]);
        return v;
    };
    for (const auto& p : params) put_record(out, p.name, p.value.shape, to_f32(p.value));
    for (std::size_t i = 0; i < bn_states.size(); ++i) {
        put_record(out, bn_names[i] + ".running_mean", bn_states[i].running_mean.shape,
                   to_f32(bn_states[i].running_mean));
        put_record(out, bn_names[i] + ".running_var", bn_states[i].running_var.shape,
                   to_f32(bn_states[i].running_var));
    }
    for (const auto& [name, vals] : extras) put_record(out, name, {vals.size()}, vals);

    std::ofstream fo(path, std::ios::binary | std::ios::trunc);
    if (!fo) throw DataError("cannot open for writing: " + path.string());
    fo.write(out.data(), static_cast<std::streamsize>(out.size()));
}

template <typename T>
TwoBranchModel<T> TwoBranchModel<T>::load(const std::filesystem::path& path,
                                          std::map<std::string, std::vector<float>>* extras) {
    using namespace tbm_detail;
    std::ifstream fi(path, std::ios::binary);
    if (!fi) throw DataError("cannot open model file: " + path.string());
    std::ostringstream ss;
    ss << fi.rdbuf();
    const std::string in = ss.str();
    if (in.size() < 6 || in.compare(0, 4, "TBM1") != 0) throw DataError("TBM1: bad magic");
    std::size_t off = 4;
    if (get<std::uint16_t>(in, off) != 1) throw DataError("TBM1: unsupported version");

    ArchConfig cfg;
    cfg.in_channels = get<std::uint32_t>(in, off);
    cfg.in_length = get<std::uint32_t>(in, off);
    cfg.main_kernel = get<std::uint32_t>(in, off);
    const auto n_stages = get<std::uint32_t>(in, off);
    cfg.stage_depths.clear();
    cfg.stage_widths.clear();
    for (std::uint32_t s = 0; s < n_stages; ++s) {
        cfg.stage_depths.push_back(get<std::uint32_t>(in, off));
        cfg.stage_widths.push_back(get<std::uint32_t>(in, off));
    }
    cfg.time_stride = get<std::uint32_t>(in, off);
    cfg.branch_enabled = get<std::uint8_t>(in, off) != 0;
    cfg.branch_width = get<std::uint32_t>(in, off);
    cfg.branch_kernel_w = get<std::uint32_t>(in, off);
    cfg.n_classes = get<std::uint32_t>(in, off);

    RandomSource dummy(0);
    TwoBranchModel mdl = build(cfg, dummy);

    std::map<std::string, std::size_t> by_name;
    for (std::size_t i = 0; i < mdl.params.size(); ++i) by_name[mdl.params[i].name] = i;
    std::map<std::string, std::size_t> bn_by_name;
    for (std::size_t i = 0; i < mdl.bn_names.size(); ++i) bn_by_name[mdl.bn_names[i]] = i;

    const auto n_records = get<std::uint32_t>(in, off);
    for (std::uint32_t r = 0; r < n_records; ++r) {
        const auto name_len = get<std::uint32_t>(in, off);
        if (off + name_len > in.size()) throw DataError("TBM1: truncated name");
        const std::string name = in.substr(off, name_len);
        off += name_len;
        const auto ndim = get<std::uint8_t>(in, off);
        std::vector<std::size_t> shape;
        std::size_t numel = 1;
        for (std::uint8_t i = 0; i < ndim; ++i) {
            shape.push_back(get<std::uint32_t>(in, off));
            numel *= shape.back();
        }
        std::vector<float> vals(numel);
        for (auto& v : vals) v = get<float>(in, off);

        if (auto it = by_name.find(name); it != by_name.end()) {
            auto& p = mdl.params[it->second];
            if (p.value.numel() != numel) throw DataError("TBM1: shape mismatch for " + name);
            for (std::size_t i = 0; i < numel; ++i) p.value.v[i] = static_cast<T>(vals[i]);
        } else if (name.size() > 13 && name.rfind(".running_mean") == name.size() - 13) {
            auto it2 = bn_by_name.find(name.substr(0, name.size() - 13));
            if (it2 == bn_by_name.end()) throw DataError("TBM1: unknown bn record " + name);
            auto& t = mdl.bn_states[it2->second].running_mean;
            for (std::size_t i = 0; i < numel; ++i) t.v[i] = static_cast<T>(vals[i]);
        } else if (name.size() > 12 && name.rfind(".running_var") == name.size() - 12) {
            auto it2 = bn_by_name.find(name.substr(0, name.size() - 12));
            if (it2 == bn_by_name.end()) throw DataError("TBM1: unknown bn record " + name);
            auto& t = mdl.bn_states[it2->second].running_var;
            for (std::size_t i = 0; i < numel; ++i) t.v[i] = static_cast<T>(vals[i]);
        } else if (extras) {
            (*extras)[name] = std::move(vals);
        }
    }
    return mdl;
}

}  // namespace eegad::nn
