"""Small enums shared across modules."""

from enum import Enum


class DataType(str, Enum):
    WEIGHTS = "Weights"
    INPUTS = "Inputs"
    OUTPUTS = "Outputs"


class DeviceKind(str, Enum):
    SRAM = "SRAM"
    STT = "STT"
    SOT = "SOT"
    VGSOT = "VGSOT"

    @property
    def is_nvm(self) -> bool:
        return self is not DeviceKind.SRAM

    @classmethod
    def parse(cls, text: str) -> "DeviceKind":
        try:
            return cls[text.upper()]
        except KeyError:
            raise ValueError(f"unknown device {text!r}; choose from {[d.value for d in cls]}") from None


MRAM_DEVICES = (DeviceKind.STT, DeviceKind.SOT, DeviceKind.VGSOT)
