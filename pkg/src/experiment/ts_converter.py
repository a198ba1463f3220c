"""
Converter from the UEA/sktime `.ts` archive format to the one-sample-per-line
`label;ch1_v1,ch1_v2,...;ch2_v1,...` format read in public mode.

A `.ts` file starts with `@` header lines (`@problemName`, `@dimensions`,
`@classLabel true <label> <label>` ...) and `#` comments, then `@data`
followed by one sample per line: channels separated by `:`, values by `,`,
the class label last. Only equal-length two-class files are accepted.
"""
import logging
import os
from dataclasses import dataclass, field
from typing import List, Optional

from src.custom_exception import DatasetFormatError


@dataclass
class TsDataset:
    problem_name: str = ''
    class_labels: List[str] = field(default_factory=list)
    samples: List[tuple] = field(default_factory=list)

    def label_map(self, positive: Optional[str] = None):
        labels = self.class_labels or sorted({label for label, _ in self.samples})
        if len(labels) != 2:
            raise DatasetFormatError(f"{self.problem_name}: binary classification needs 2 class labels, "
                                     f"found {len(labels)} ({', '.join(labels)})")
        if positive is None:
            negative, positive = sorted(labels)
        elif positive in labels:
            negative = [label for label in labels if label != positive][0]
        else:
            raise DatasetFormatError(f"{self.problem_name}: positive label {positive!r} is not one of "
                                     f"{', '.join(labels)}")
        return {negative: 0, positive: 1}


def parse_ts_line(line, where):
    *channels, label = line.split(':')
    if not channels:
        raise DatasetFormatError(f"{where}: expected 'ch1:ch2:...:label'")
    parsed = []
    for channel in channels:
        values = channel.split(',')
        if '?' in (v.strip() for v in values):
            raise DatasetFormatError(f"{where}: missing values are not supported")
        try:
            parsed.append([float(v) for v in values])
        except ValueError as e:
            raise DatasetFormatError(f"{where}: {format(e)}")
    if len({len(c) for c in parsed}) != 1:
        raise DatasetFormatError(f"{where}: channels have different lengths")
    return label.strip(), parsed


def read_ts_file(path) -> TsDataset:
    dataset = TsDataset(problem_name=os.path.splitext(os.path.basename(path))[0])
    in_data = False
    with open(path, 'r', encoding='utf-8') as file:
        for number, raw in enumerate(file, 1):
            line = raw.strip()
            if not line or line.startswith('#'):
                continue
            if not in_data:
                key, _, value = line.partition(' ')
                key = key.lower()
                if key == '@problemname':
                    dataset.problem_name = value.strip()
                elif key == '@classlabel':
                    parts = value.split()
                    if not parts or parts[0].lower() != 'true':
                        raise DatasetFormatError(f"{path}:{number}: file has no class labels")
                    dataset.class_labels = parts[1:]
                elif key == '@equallength' and value.strip().lower() == 'false':
                    raise DatasetFormatError(f"{path}: unequal-length series are not supported")
                elif key == '@data':
                    in_data = True
                continue
            dataset.samples.append(parse_ts_line(line, f"{path}:{number}"))
    if not in_data:
        raise DatasetFormatError(f"{path}: no @data section")
    if not dataset.samples:
        raise DatasetFormatError(f"{path}: no samples after @data")
    return dataset


def format_sample(label, channels):
    return ';'.join([str(int(label))] + [','.join(repr(float(v)) for v in channel) for channel in channels])


def convert_ts(path, output_path, positive: Optional[str] = None):
    """Returns the number of samples written and the label mapping used."""
    dataset = read_ts_file(path)
    mapping = dataset.label_map(positive)
    with open(output_path, 'w', encoding='utf-8', newline='\n') as file:
        for number, (label, channels) in enumerate(dataset.samples):
            if label not in mapping:
                raise DatasetFormatError(f"{path}: sample {number} has undeclared label {label!r}")
            file.write(format_sample(mapping[label], channels) + '\n')
    logging.info(f"convert_ts: {len(dataset.samples)} samples from {path} to {output_path}, labels {mapping}")
    return len(dataset.samples), mapping
