"""Question generation engines behind the service endpoint.

TemplateEngine fills a fixed pattern and exists so the service can be
deployed and exercised end to end without model weights.  HFEngine
serves a published seq2seq checkpoint; it decodes with beam search and
no sampling, so repeated requests yield identical questions.
"""

from __future__ import annotations

from typing import Protocol

from .config import AdapterConfig


class QuestionEngine(Protocol):
    def generate(self, context: str, answer: str, max_new_tokens: int) -> str: ...


def truncate_tokens(text: str, limit: int) -> str:
    """Cap text at limit whitespace-delimited tokens."""
    words = text.split()
    if len(words) <= limit:
        return text
    return " ".join(words[:limit])


class TemplateEngine:
    def __init__(self, question_template: str) -> None:
        self.question_template = question_template

    def generate(self, context: str, answer: str, max_new_tokens: int) -> str:
        del context
        return truncate_tokens(self.question_template.format(answer=answer), max_new_tokens)


class HFEngine:
    """Lazily loads a checkpoint from the HuggingFace hub.

    Loading happens on the first generate call so startup and /info stay
    cheap.  The prompt template arranges (answer, context) into the
    input format the checkpoint was trained on.
    """

    def __init__(self, checkpoint: str, prompt_template: str, beam_size: int) -> None:
        self.checkpoint = checkpoint
        self.prompt_template = prompt_template
        self.beam_size = beam_size
        self._bundle: tuple | None = None

    def _load(self) -> tuple:
        if self._bundle is None:
            try:
                from transformers import AutoModelForSeq2SeqLM, AutoTokenizer
            except ImportError as exc:
                raise RuntimeError(
                    "engine 'hf' needs the transformers extra: pip install 'qgen-adapter[hf]'"
                ) from exc
            tokenizer = AutoTokenizer.from_pretrained(self.checkpoint)
            model = AutoModelForSeq2SeqLM.from_pretrained(self.checkpoint)
            model.eval()
            self._bundle = (tokenizer, model)
        return self._bundle

    def generate(self, context: str, answer: str, max_new_tokens: int) -> str:
        tokenizer, model = self._load()
        prompt = self.prompt_template.format(answer=answer, context=context)
        inputs = tokenizer(prompt, return_tensors="pt", truncation=True)
        output = model.generate(
            **inputs,
            num_beams=self.beam_size,
            max_new_tokens=max_new_tokens,
            do_sample=False,
        )
        return tokenizer.decode(output[0], skip_special_tokens=True).strip()


def build_engine(config: AdapterConfig) -> QuestionEngine:
    if config.engine == "hf":
        return HFEngine(config.checkpoint, config.prompt_template, config.beam_size)
    return TemplateEngine(config.question_template)
