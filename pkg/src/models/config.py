"""
Cấu hình cho model, quá trình train và một lần chạy CLI.

Mỗi dataclass có `from_dict` (từ chối khóa lạ bằng SchemaError), `validate`
và `to_dict`. Thứ tự ưu tiên: giá trị mặc định < file config < cờ dòng lệnh.
"""

from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, List, Optional

from src.models.errors import SchemaError


ENCODERS = ("gcn", "gatedgcn", "gine", "gt")
MIXERS = ("mlpmixer", "vit")
GMHA_KINDS = ("full", "graph", "kernel", "additive", "hadamard")
NODE_PE_KINDS = ("rwse", "lap", "none")
PARTITIONERS = ("metis", "random", "node")
ARCHITECTURES = ("mixer", "mpgnn")
TOKEN_NORMS = ("mixed", "channel")
TASKS = ("regression", "classification")


def _check_keys(cls, data: Dict[str, Any], where: str) -> None:
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise SchemaError(f"Khóa không hợp lệ trong {where}", unknown)


def _check_choice(bad: List[str], key: str, value: Any, choices) -> None:
    if value not in choices:
        bad.append(key)


@dataclass
class ModelConfig:
    """
    Siêu tham số của Graph MLP-Mixer / Graph ViT.

    Attributes:
        hidden (int): Kích thước ẩn d.
        encoder_layers (int): Số lớp MP-GNN trong patch encoder (L).
        mixer_layers (int): Số lớp mixer/gViT (0 = model cắt cụt, không trộn patch).
        num_patches (int): Số patch P.
        k_hop (int): Số bước mở rộng patch.
        node_pe / node_pe_dim: Loại và chiều K của PE mức đỉnh.
        patch_pe_dim (int): Chiều K̂ của RWSE trên đồ thị patch (0 = tắt).
        patch_pe_binary (bool): Nhị phân hóa A^P trước khi tính patch PE.
        encoder (str): gcn | gatedgcn | gine | gt.
        mixer (str): mlpmixer | vit.
        gmha (str): full | graph | kernel | additive | hadamard.
        token_dim / channel_dim: d_s, d_c (0 = tự suy ra: ceil(P/2) và 4·d).
        heads (int): Số head cho vit và encoder gt.
        dropout (float): Tỉ lệ dropout duy nhất cho encoder và mixer.
        drop_prob (float): Xác suất xóa cạnh khi augmentation.
        partitioner (str): metis | random | node.
        epsilon (float): Dung sai cân bằng phân hoạch.
        architecture (str): mixer (đầy đủ) | mpgnn (baseline MP-GNN không patch).
        token_norm (str): mixed (LayerNorm theo trục đang trộn) | channel.
        task / num_classes: Loại bài toán; được điền từ dataset.
        node_in_dim / edge_in_dim / node_vocab / edge_vocab: Điền từ dataset.
    """

    hidden: int = 128
    encoder_layers: int = 4
    mixer_layers: int = 4
    num_patches: int = 32
    k_hop: int = 1
    node_pe: str = "rwse"
    node_pe_dim: int = 8
    patch_pe_dim: int = 8
    patch_pe_binary: bool = False
    encoder: str = "gine"
    mixer: str = "mlpmixer"
    gmha: str = "hadamard"
    token_dim: int = 0
    channel_dim: int = 0
    heads: int = 4
    dropout: float = 0.0
    drop_prob: float = 0.3
    partitioner: str = "metis"
    epsilon: float = 0.1
    refine_passes: int = 10
    architecture: str = "mixer"
    token_norm: str = "mixed"
    task: str = "regression"
    num_classes: int = 1
    node_in_dim: int = 1
    edge_in_dim: int = 0
    node_vocab: Optional[List[int]] = None
    edge_vocab: Optional[List[int]] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ModelConfig":
        _check_keys(cls, data, "model")
        config = cls(**data)
        config.validate()
        return config

    @property
    def token_width(self) -> int:
        return self.token_dim if self.token_dim > 0 else max(1, (self.num_patches + 1) // 2)

    @property
    def channel_width(self) -> int:
        return self.channel_dim if self.channel_dim > 0 else 4 * self.hidden

    @property
    def output_dim(self) -> int:
        return self.num_classes if self.task == "classification" else 1

    def validate(self) -> None:
        """
        Kiểm tra miền giá trị.

        Raises:
            SchemaError: Liệt kê mọi khóa có giá trị sai.
        """
        bad: List[str] = []
        for key in ("hidden", "encoder_layers", "num_patches", "heads", "node_in_dim"):
            if getattr(self, key) < 1:
                bad.append(key)
        for key in ("mixer_layers", "k_hop", "node_pe_dim", "patch_pe_dim",
                    "token_dim", "channel_dim", "edge_in_dim", "refine_passes"):
            if getattr(self, key) < 0:
                bad.append(key)
        if not 0.0 <= self.drop_prob < 1.0:
            bad.append("drop_prob")
        if not 0.0 <= self.dropout < 1.0:
            bad.append("dropout")
        if self.epsilon < 0:
            bad.append("epsilon")
        _check_choice(bad, "encoder", self.encoder, ENCODERS)
        _check_choice(bad, "mixer", self.mixer, MIXERS)
        _check_choice(bad, "gmha", self.gmha, GMHA_KINDS)
        _check_choice(bad, "node_pe", self.node_pe, NODE_PE_KINDS)
        _check_choice(bad, "partitioner", self.partitioner, PARTITIONERS)
        _check_choice(bad, "architecture", self.architecture, ARCHITECTURES)
        _check_choice(bad, "token_norm", self.token_norm, TOKEN_NORMS)
        _check_choice(bad, "task", self.task, TASKS)
        if self.task == "classification" and self.num_classes < 2:
            bad.append("num_classes")
        if self.mixer == "vit" and self.hidden % max(self.heads, 1) != 0:
            bad.append("heads")
        if self.encoder == "gt" and self.hidden % max(self.heads, 1) != 0:
            bad.append("heads")
        if self.node_pe != "none" and self.node_pe_dim < 1:
            bad.append("node_pe_dim")
        if bad:
            raise SchemaError("Giá trị cấu hình model không hợp lệ", set(bad))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def with_dataset(self, dataset) -> "ModelConfig":
        """Điền kích thước đầu vào và task từ một Dataset."""
        return replace(
            self,
            task=dataset.task.kind,
            num_classes=dataset.task.num_classes,
            node_in_dim=max(1, dataset.node_feat_dim),
            edge_in_dim=dataset.edge_feat_dim,
            node_vocab=list(dataset.node_vocab) if dataset.node_vocab else None,
            edge_vocab=list(dataset.edge_vocab) if dataset.edge_vocab else None,
        )


@dataclass
class TrainConfig:
    """Siêu tham số huấn luyện (Adam, batch, số epoch, xuất file)."""

    epochs: int = 100
    batch_size: int = 32
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float = 5.0
    num_workers: int = 0
    eval_seed: int = 12345
    export_excel: bool = False
    plot: bool = False

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrainConfig":
        _check_keys(cls, data, "train")
        config = cls(**data)
        config.validate()
        return config

    def validate(self) -> None:
        bad: List[str] = []
        if self.epochs < 0:
            bad.append("epochs")
        if self.batch_size < 1:
            bad.append("batch_size")
        if self.lr <= 0:
            bad.append("lr")
        if not 0.0 <= self.beta1 < 1.0:
            bad.append("beta1")
        if not 0.0 <= self.beta2 < 1.0:
            bad.append("beta2")
        if self.eps <= 0:
            bad.append("eps")
        if self.clip_norm < 0:
            bad.append("clip_norm")
        if self.num_workers < 0:
            bad.append("num_workers")
        if bad:
            raise SchemaError("Giá trị cấu hình train không hợp lệ", set(bad))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class DatasetSpec:
    """
    Mô tả nguồn dữ liệu.

    Attributes:
        source (str): csl | tree | triangles | jsonl.
        path (str): Đường dẫn file khi source = jsonl.
        depth (int): r cho TreeNeighbourMatch.
        num_samples (int): Số mẫu (tree, triangles).
        cap (int): Giới hạn số đồ thị khi load jsonl (0 = không giới hạn).
        split (str): given | random | kfold | full.
        folds (int): k khi split = kfold.
        fold (int): Fold dùng cho một lần train (-1 = chạy toàn bộ cross-validation).
        stratified (bool): Chia k-fold phân tầng.
        fractions (list): Tỉ lệ train/valid/test khi split = random.
    """

    source: str = "csl"
    path: str = ""
    depth: int = 2
    num_samples: int = 0
    cap: int = 0
    split: str = "given"
    folds: int = 5
    fold: int = 0
    stratified: bool = True
    fractions: List[float] = field(default_factory=lambda: [0.8, 0.1, 0.1])

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DatasetSpec":
        _check_keys(cls, data, "dataset")
        spec = cls(**data)
        spec.validate()
        return spec

    def validate(self) -> None:
        bad: List[str] = []
        _check_choice(bad, "source", self.source, ("csl", "tree", "triangles", "jsonl"))
        _check_choice(bad, "split", self.split, ("given", "random", "kfold", "full"))
        if self.source == "jsonl" and not self.path:
            bad.append("path")
        if self.depth < 1:
            bad.append("depth")
        if self.num_samples < 0:
            bad.append("num_samples")
        if self.cap < 0:
            bad.append("cap")
        if self.split == "kfold" and (self.folds < 2 or not -1 <= self.fold < self.folds):
            bad.append("folds")
        if len(self.fractions) != 3 or any(f < 0 for f in self.fractions) \
                or abs(sum(self.fractions) - 1.0) > 1e-9:
            bad.append("fractions")
        if bad:
            raise SchemaError("Giá trị cấu hình dataset không hợp lệ", set(bad))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class RunConfig:
    """Tài liệu JSON đầy đủ cho một lần chạy CLI."""

    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    out: str = "runs/default"
    seed: int = 0

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        """
        Dựng RunConfig từ dict, kiểm tra schema trước mọi thao tác.

        Raises:
            SchemaError: Khóa lạ (ở mọi cấp) hoặc giá trị sai.
        """
        if not isinstance(data, dict):
            raise SchemaError("Config phải là một JSON object")
        _check_keys(cls, data, "config")
        unknown = []
        for section, sub in (("model", ModelConfig), ("train", TrainConfig),
                             ("dataset", DatasetSpec)):
            known = {f.name for f in fields(sub)}
            unknown += [f"{section}.{k}" for k in data.get(section, {}) if k not in known]
        if unknown:
            raise SchemaError("Khóa không hợp lệ trong config", unknown)
        return cls(
            model=ModelConfig.from_dict(data.get("model", {})),
            train=TrainConfig.from_dict(data.get("train", {})),
            dataset=DatasetSpec.from_dict(data.get("dataset", {})),
            out=str(data.get("out", "runs/default")),
            seed=int(data.get("seed", 0)),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model": self.model.to_dict(),
            "train": self.train.to_dict(),
            "dataset": self.dataset.to_dict(),
            "out": self.out,
            "seed": self.seed,
        }
