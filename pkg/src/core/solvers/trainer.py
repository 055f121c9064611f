"""
Vòng huấn luyện Graph MLP-Mixer với phân hoạch lại mỗi epoch (augmentation),
chọn epoch theo validation tốt nhất và cross-validation k-fold.
"""

import logging
import time
from concurrent.futures import Future, ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.batching import PreparedGraph, collate, prepare_graph
from src.core.layers.base import ModelParams
from src.core.layers.graph_mixer import GraphMixerModel
from src.core.metrics import compute_metrics, higher_is_better, loss_fn, primary_metric
from src.core.posenc import compute_node_pe
from src.core.solvers.adam import OptimState, adam_step, clip_by_global_norm
from src.core.solvers.base_trainer import BaseTrainer
from src.core.tensor import Tape
from src.models.config import ModelConfig, TrainConfig
from src.models.dataset import Dataset
from src.models.errors import DataError
from src.models.run_record import EpochRecord, RunRecord

logger = logging.getLogger(__name__)


def derive_seed(*parts: int) -> int:
    """Seed 32-bit suy ra từ một dãy số nguyên (master seed, epoch, chỉ số, ...)."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


# Mỗi luồng ngẫu nhiên của trainer có một tag riêng đứng ngay sau master seed
SEED_STREAMS = {"partition": 1, "pe": 2, "dropout": 3, "shuffle": 4}


def stream_seed(master: int, kind: str, epoch: int, index: int = 0) -> int:
    """
    Seed cho một luồng ngẫu nhiên (phân hoạch, PE, dropout, xáo trộn) tại (epoch, index).

    Raises:
        KeyError: kind không thuộc SEED_STREAMS.
    """
    return derive_seed(master, SEED_STREAMS[kind], epoch, index)


@dataclass
class TrainResult:
    """
    Kết quả train_loop.

    Attributes:
        record (RunRecord): Lịch sử theo epoch.
        params (ModelParams): Tham số tại epoch được chọn (khởi tạo nếu epochs = 0).
        model (GraphMixerModel): Model dựng trên params.
        metrics (Dict[str, Dict[str, float]]): Metric đầy đủ trên valid/test tại epoch được chọn.
    """

    record: RunRecord
    params: ModelParams
    model: GraphMixerModel
    metrics: Dict[str, Dict[str, float]] = field(default_factory=dict)


class GraphMixerTrainer(BaseTrainer):
    """
    Trainer cho một split train/valid/test.

    Mỗi epoch: phân hoạch lại từng đồ thị train với seed suy ra từ
    (master seed, epoch, chỉ số đồ thị), xáo trộn, chia batch, bước Adam.
    Valid/test dùng drop_prob = 0 và một seed phân hoạch cố định (eval_seed).

    Khi drop_prob = 0 và PE không phụ thuộc ngẫu nhiên, đồ thị train dùng chung
    bản đã chuẩn bị (cache) với lúc đánh giá.

    Khi có augmentation và num_workers > 0, patch của epoch e+1 được chuẩn bị
    trong process pool song song với lúc epoch e huấn luyện.
    """

    def __init__(self, model_config: ModelConfig, train_config: TrainConfig,
                 dataset: Dataset, seed: int = 0, require_train: bool = True, **callbacks):
        self.model_config = model_config
        self.require_train = require_train
        self.train_config = train_config
        self.dataset = dataset
        self.seed = int(seed)
        super().__init__(config={}, **callbacks)

        self.params = ModelParams(self.seed)
        self.model = GraphMixerModel(model_config, self.params)
        self.task = dataset.task
        self.record = RunRecord(primary_metric(self.task), higher_is_better(self.task))
        self.preparation_time = 0.0
        self._eval_cache: Dict[int, PreparedGraph] = {}
        self._pe_cache: Dict[int, np.ndarray] = {}

    def _validate_input(self) -> None:
        if self.require_train and len(self._split("train")) == 0:
            raise DataError("Dataset không có split train")
        if self.model_config.task != self.dataset.task.kind:
            raise DataError(
                f"Task của model ({self.model_config.task}) khác dataset ({self.dataset.task.kind})"
            )

    def _split(self, name: str) -> np.ndarray:
        return np.asarray(self.dataset.splits.get(name, np.zeros(0, dtype=np.int64)),
                          dtype=np.int64)

    # ========================================================================
    # TIỀN XỬ LÝ
    # ========================================================================

    @property
    def _static_train_patches(self) -> bool:
        return self.model_config.drop_prob == 0.0 and self.model_config.node_pe != "lap"

    @property
    def _prefetch(self) -> bool:
        return self.train_config.num_workers > 0 and not self._static_train_patches

    def _fixed_node_pe(self, index: int) -> Optional[np.ndarray]:
        """RWSE/none không phụ thuộc phân hoạch: tính một lần cho mỗi đồ thị."""
        if self.model_config.node_pe == "lap":
            return None
        if index not in self._pe_cache:
            g = self.dataset[index]
            self._pe_cache[index] = compute_node_pe(
                g, self.model_config.node_pe, self.model_config.node_pe_dim).values
        return self._pe_cache[index]

    def _train_seeds(self, index: int, epoch: int) -> Tuple[int, int]:
        """(seed phân hoạch, seed PE) của một đồ thị train tại một epoch."""
        if self.model_config.drop_prob == 0.0:
            partition_seed = self.train_config.eval_seed
        else:
            partition_seed = stream_seed(self.seed, "partition", epoch, index)
        return partition_seed, stream_seed(self.seed, "pe", epoch, index)

    def _prepare_train(self, index: int, epoch: int) -> PreparedGraph:
        """
        Patch của một đồ thị train tại một epoch.

        drop_prob = 0 thì phân hoạch dùng eval_seed, tức cùng tập patch với lúc
        đánh giá; augmentation chỉ có khi drop_prob > 0.
        """
        if self._static_train_patches:
            return self._prepare_eval(index)
        partition_seed, pe_seed = self._train_seeds(index, epoch)
        return prepare_graph(self.dataset[index], self.model_config, partition_seed,
                             training=True, node_pe=self._fixed_node_pe(index),
                             pe_seed=pe_seed)

    def _prepare_eval(self, index: int) -> PreparedGraph:
        cached = self._eval_cache.get(index)
        if cached is None:
            cached = prepare_graph(self.dataset[index], self.model_config,
                                   self.train_config.eval_seed, training=False,
                                   node_pe=self._fixed_node_pe(index))
            self._eval_cache[index] = cached
        return cached

    def _map(self, fn, indices: Sequence[int]) -> List[PreparedGraph]:
        started = time.perf_counter()
        workers = self.train_config.num_workers
        if workers > 0 and len(indices) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                items = list(pool.map(fn, indices))
        else:
            items = [fn(i) for i in indices]
        self.preparation_time += time.perf_counter() - started
        return items

    # ========================================================================
    # ĐÁNH GIÁ
    # ========================================================================

    def predict(self, indices: Sequence[int]) -> np.ndarray:
        """Dự đoán (eval mode) cho các đồ thị theo chỉ số."""
        indices = list(indices)
        items = self._map(self._prepare_eval, indices)
        size = self.train_config.batch_size
        outputs = [
            self.model.predict(collate(items[s:s + size], self.task.is_classification))
            for s in range(0, len(items), size)
        ]
        return np.concatenate(outputs, axis=0) if outputs else np.zeros((0, self.task.output_dim))

    def evaluate(self, indices: Sequence[int]) -> Dict[str, float]:
        indices = list(indices)
        if not indices:
            return {}
        return compute_metrics(self.predict(indices), self.dataset.targets(indices), self.task)

    # ========================================================================
    # HUẤN LUYỆN
    # ========================================================================

    def epoch_order(self, epoch: int) -> np.ndarray:
        """Thứ tự xáo trộn các đồ thị train của một epoch."""
        shuffle = np.random.default_rng(stream_seed(self.seed, "shuffle", epoch))
        return shuffle.permutation(self._split("train"))

    def _submit_epoch(self, pool: ProcessPoolExecutor, epoch: int) -> List[Future]:
        """Gửi việc chuẩn bị patch của một epoch cho các process worker."""
        futures = []
        for index in self.epoch_order(epoch):
            index = int(index)
            partition_seed, pe_seed = self._train_seeds(index, epoch)
            futures.append(pool.submit(
                prepare_graph, self.dataset[index], self.model_config, partition_seed,
                True, self._fixed_node_pe(index), pe_seed,
            ))
        return futures

    def _collect(self, futures: List[Future]) -> List[PreparedGraph]:
        started = time.perf_counter()
        items = [f.result() for f in futures]
        self.preparation_time += time.perf_counter() - started
        return items

    def train_epoch(self, epoch: int, state: OptimState,
                    items: Optional[List[PreparedGraph]] = None) -> float:
        """
        Một epoch; trả về loss train trung bình (trọng số theo kích thước batch).

        Args:
            items (List[PreparedGraph], optional): Patch đã chuẩn bị sẵn theo
                epoch_order(epoch); None thì chuẩn bị ngay tại đây.
        """
        if items is None:
            items = self._map(lambda i: self._prepare_train(int(i), epoch),
                              self.epoch_order(epoch))
        params = self.params.tensors()
        size = self.train_config.batch_size
        total, count = 0.0, 0
        for b, start in enumerate(range(0, len(items), size)):
            batch = collate(items[start:start + size], self.task.is_classification)
            rng = np.random.default_rng(stream_seed(self.seed, "dropout", epoch, b))
            with Tape() as tape:
                pred = self.model(batch, training=True, rng=rng)
                loss = loss_fn(pred, batch.targets, self.task)
            grads = tape.backward(loss, params)
            grads = clip_by_global_norm(grads, self.train_config.clip_norm)
            adam_step(params, grads, state)
            total += loss.item() * batch.batch_size
            count += batch.batch_size
        return total / max(count, 1)

    def _selection_metric(self, valid: Dict[str, float], train_idx: np.ndarray) -> float:
        name = self.record.metric_name
        if valid:
            return valid[name]
        # không có valid: chọn theo metric trên train (eval mode)
        return self.evaluate(train_idx)[name]

    def run(self) -> TrainResult:
        """
        Huấn luyện đủ train_config.epochs epoch.

        Returns:
            TrainResult: Tham số tại epoch có validation tốt nhất.
        """
        self.is_running = True
        self.should_stop = False
        self.start_time = time.time()
        cfg = self.train_config
        state = OptimState.for_params(self.params.tensors(), cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
        self.model.fit_input_norms(self._map(self._prepare_eval, self._split("train")))
        best_state = self.params.state_dict()
        valid_idx, test_idx = self._split("valid"), self._split("test")
        if len(valid_idx) == 0 and len(test_idx) == 0:
            # chế độ full: đánh giá trên chính tập train
            test_idx = self._split("train")
        name = self.record.metric_name
        self._log(f"🔥 Bắt đầu huấn luyện: {len(self._split('train'))} đồ thị train, "
                  f"{self.params.num_parameters} tham số")

        pool = ProcessPoolExecutor(cfg.num_workers) if self._prefetch else None
        pending = self._submit_epoch(pool, 0) if pool is not None and cfg.epochs > 0 else []
        try:
            for epoch in range(cfg.epochs):
                if self.should_stop:
                    self._log("⚠️ Dừng sớm theo yêu cầu")
                    break
                started = time.perf_counter()
                items = None
                if pool is not None:
                    # epoch kế tiếp được phân hoạch trong lúc epoch này huấn luyện
                    items = self._collect(pending)
                    if epoch + 1 < cfg.epochs:
                        pending = self._submit_epoch(pool, epoch + 1)
                train_loss = self.train_epoch(epoch, state, items)
                valid = self.evaluate(valid_idx)
                test = self.evaluate(test_idx)
                record = EpochRecord(
                    epoch=epoch,
                    train_loss=train_loss,
                    valid_metric=self._selection_metric(valid, self._split("train")),
                    test_metric=test.get(name, float("nan")),
                    seconds=time.perf_counter() - started,
                )
                self.record.add(record)
                if self.record.selected_epoch == epoch:
                    best_state = self.params.state_dict()
                self.convergence_history.append(train_loss)
                self.total_epochs += 1
                self._emit_epoch(epoch, train_loss, record.valid_metric, record.test_metric)
                self._emit_progress(epoch + 1, cfg.epochs)
                logger.debug("📊 Epoch %d: loss=%.5f valid=%.5f test=%.5f",
                             epoch, train_loss, record.valid_metric, record.test_metric)
        finally:
            if pool is not None:
                pool.shutdown(cancel_futures=True)

        self.params.load_state_dict(best_state)
        metrics = {"valid": self.evaluate(valid_idx), "test": self.evaluate(test_idx)}
        self.end_time = time.time()
        self.is_running = False
        summary = self.record.summary()
        self._log(f"✅ Xong {len(self.record.epochs)} epoch, chọn epoch {summary['selected_epoch']}, "
                  f"test {name} = {summary['test_at_best_valid']}")
        return TrainResult(record=self.record, params=self.params, model=self.model,
                           metrics=metrics)


def train_loop(model_config: ModelConfig, train_config: TrainConfig, dataset: Dataset,
               seed: int = 0, **callbacks) -> TrainResult:
    """Huấn luyện một model trên dataset.splits; model_config được điền từ dataset."""
    config = model_config.with_dataset(dataset)
    return GraphMixerTrainer(config, train_config, dataset, seed, **callbacks).run()


@dataclass
class CrossValidationResult:
    """Kết quả k-fold: metric test tại epoch được chọn của từng fold."""

    metric_name: str
    fold_metrics: List[float]
    records: List[RunRecord]

    @property
    def mean(self) -> float:
        return float(np.mean(self.fold_metrics)) if self.fold_metrics else float("nan")

    @property
    def std(self) -> float:
        return float(np.std(self.fold_metrics)) if self.fold_metrics else float("nan")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "metric": self.metric_name,
            "folds": self.fold_metrics,
            "mean": self.mean,
            "std": self.std,
            "selected_epochs": [r.selected_epoch for r in self.records],
        }


def run_cross_validation(model_config: ModelConfig, train_config: TrainConfig,
                         dataset: Dataset, seed: int = 0, **callbacks) -> CrossValidationResult:
    """
    Huấn luyện lần lượt trên từng fold của dataset.folds.

    Raises:
        DataError: Dataset không có fold.
    """
    if not dataset.folds:
        raise DataError("Dataset không có fold nào để cross-validation")
    metric = primary_metric(dataset.task)
    scores, records = [], []
    for i, fold in enumerate(dataset.folds):
        split = dataset.with_splits({"train": fold.train, "valid": fold.valid, "test": fold.test})
        result = train_loop(model_config, train_config, split, seed, **callbacks)
        summary = result.record.summary()
        value = summary["test_at_best_valid"]
        if value is None:
            value = result.metrics["test"].get(metric, float("nan"))
        scores.append(float(value))
        records.append(result.record)
        logger.info("📊 Fold %d/%d: test %s = %.4f", i + 1, len(dataset.folds), metric, value)
    return CrossValidationResult(metric, scores, records)
