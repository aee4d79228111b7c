"""
page-level glue: views -> visual tokens -> flow tokens -> decoder
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

from causalflow.models.causalflow_model import CausalFlowModel
from causalflow.models.document import Sample
from causalflow.models.flow import VIEW_KINDS, FlowTokens
from causalflow.models.image import ImageTensor
from causalflow.numerics.tensor import Tensor, no_grad
from causalflow.schemas.decoder.config import GenerationSettings
from causalflow.services import decoder_service, encoder_service, planner_service, tokenizer_service
from causalflow.services.masking_service import AttentionStats

log = logging.getLogger("causalflow")

ENCODER_GROUPS = ("tokenizer", "encoder", "queries")


@dataclass
class View:
    kind: VIEW_KINDS
    index: int
    image: ImageTensor


def single_view(sample: Sample, model: CausalFlowModel, index: int) -> View:
    """
    Pretraining input: the whole page on one canvas. Even indices use the
    global canvas and global queries, odd ones the local canvas and local
    queries, so both resolutions are trained.
    """
    if index % 2 == 0:
        return View("global", 0, planner_service.single_view(sample.image, model.planner.global_canvas))
    return View("local", 0, planner_service.single_view(sample.image, model.planner.local_canvas))


def multi_crop_views(sample: Sample, model: CausalFlowModel) -> List[View]:
    """The global view plus the planned local crops"""
    crop_plan = planner_service.plan(sample.image.width, sample.image.height, model.planner)
    global_image, local_images = planner_service.apply(crop_plan, sample.image)
    return [View("local", i, image) for i, image in enumerate(local_images)] + [View("global", 0, global_image)]


def prepare_views(sample: Sample, model: CausalFlowModel, stage: int, index: int = 0) -> List[View]:
    if stage == 1:
        return [single_view(sample, model, index)]
    return multi_crop_views(sample, model)


def encode(view: View, model: CausalFlowModel, stats: Optional[AttentionStats] = None) -> FlowTokens:
    visual = tokenizer_service.tokenize(view.image, model.tokenizer, model.store)
    return encoder_service.encode_view(
        visual, model.queries, view.kind, model.encoder, model.store, view_index=view.index, stats=stats
    )


def page_flow(views: List[View], model: CausalFlowModel, stats: Optional[AttentionStats] = None) -> Tensor:
    """Decoder prefix for one page: locals in crop order, then the global view"""
    flows = [encode(view, model, stats) for view in views]
    if len(flows) == 1:
        return flows[0].values
    global_flow = next(f for f in flows if f.view_kind == "global")
    return encoder_service.assemble_sequence(global_flow, [f for f in flows if f.view_kind == "local"])


def encoder_frozen(model: CausalFlowModel) -> bool:
    return not any(p.trainable for p in model.store.parameters(ENCODER_GROUPS))


def page_loss(sample: Sample, model: CausalFlowModel, stage: int, index: int = 0) -> Tensor:
    """Next-token loss of the sample's target given its page"""
    views = prepare_views(sample, model, stage, index)
    if encoder_frozen(model):
        with no_grad():
            flow = page_flow(views, model)
    else:
        flow = page_flow(views, model)
    return decoder_service.decode_train(flow, sample.target, model.decoder, model.store)


class ModelRecognizer:
    """Callable mapping a page to predicted token ids and the visual tokens spent on it"""

    def __init__(self, model: CausalFlowModel, stage: int = 3):
        self.model = model
        self.stage = stage

    def __call__(self, sample: Sample, generation: GenerationSettings) -> Tuple[List[int], int]:
        with no_grad():
            flow = page_flow(prepare_views(sample, self.model, self.stage), self.model)
            predicted = decoder_service.generate(
                flow, [self.model.decoder.bos], generation, self.model.decoder, self.model.store
            )
        return predicted, flow.shape[0]
