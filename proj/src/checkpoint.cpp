#include "posereg/checkpoint.hpp"

#include "posereg/container.hpp"

namespace posereg {

void save_checkpoint(const std::string& path, const TinyModel& model) {
    NamedTensor meta;
    meta.name = "meta";
    meta.dtype = 1;
    meta.data = {static_cast<double>(model.cfg.num_keypoints), static_cast<double>(model.cfg.feat_channels),
                 static_cast<double>(model.cfg.inst_channels), static_cast<double>(model.cfg.n_semantic),
                 static_cast<double>(model.cfg.conv_kernel),   static_cast<double>(model.cfg.conv_layers)};
    meta.dims = {static_cast<int64_t>(meta.data.size())};

    NamedTensor params;
    params.name = "params";
    params.dtype = 1;
    params.data = flatten_params(model);
    params.dims = {static_cast<int64_t>(params.data.size())};

    const NamedTensor tensors[] = {meta, params};
    write_tensor_file(path, tensors);
}

TinyModel load_checkpoint(const std::string& path) {
    const std::vector<NamedTensor> tensors = read_tensor_file(path);
    const NamedTensor& meta = find_tensor(tensors, "meta");
    if (meta.data.size() != 6) throw ParseError(path + ": checkpoint meta must have 6 entries");

    ModelConfig cfg;
    cfg.num_keypoints = static_cast<int>(meta.data[0]);
    cfg.feat_channels = static_cast<int>(meta.data[1]);
    cfg.inst_channels = static_cast<int>(meta.data[2]);
    cfg.n_semantic = static_cast<int>(meta.data[3]);
    cfg.conv_kernel = static_cast<int>(meta.data[4]);
    cfg.conv_layers = static_cast<int>(meta.data[5]);

    TinyModel model = TinyModel::init(cfg, 0);
    const NamedTensor& params = find_tensor(tensors, "params");
    if (params.data.size() != model.num_params())
        throw ParseError(path + ": checkpoint parameter count does not match the architecture");
    unflatten_params(model, params.data);
    return model;
}

} // namespace posereg
