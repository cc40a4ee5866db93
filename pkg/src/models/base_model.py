"""
Base Model for the PLDM toolchain
Provides common functionality for all data models.
"""

import dataclasses
import json
from abc import ABC, abstractmethod
from typing import Any, Dict, Iterable, Type, TypeVar

from error_handler import ConfigError

M = TypeVar("M", bound="BaseModel")


class BaseModel(ABC):
    """Abstract base class for all data models."""

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        """
        Convert model to dictionary representation.

        Returns:
            JSON-serializable dictionary representation of the model
        """
        pass

    @classmethod
    @abstractmethod
    def from_dict(cls: Type[M], data: Dict[str, Any]) -> M:
        """
        Build a model from dictionary data.

        Args:
            data: Dictionary containing model data
        """
        pass

    def validate(self) -> bool:
        """
        Validate the model data.

        Returns:
            True if valid, False otherwise
        """
        # Default validation - can be overridden by subclasses
        return True

    def ensure_valid(self: M) -> M:
        """
        Raise ConfigError unless the model validates.

        Returns:
            The model itself, for chaining
        """
        if not self.validate():
            raise ConfigError(f"Invalid {type(self).__name__}: {self.to_dict()}")
        return self

    def to_json(self) -> str:
        """Canonical JSON text of the model."""
        return json.dumps(self.to_dict(), sort_keys=True)

    def get_property(self, name: str, default: Any = None) -> Any:
        """
        Get a property value safely.

        Args:
            name: Property name
            default: Default value if property doesn't exist

        Returns:
            Property value or default
        """
        return getattr(self, name, default)


class DataclassModel(BaseModel):
    """BaseModel for flat dataclasses whose fields are JSON scalars or lists."""

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]):
        known = {f.name for f in dataclasses.fields(cls)}
        _reject_unknown(cls.__name__, data, known)
        return cls(**data)


def _reject_unknown(owner: str, data: Dict[str, Any], known: Iterable[str]) -> None:
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"Unknown {owner} key(s): {', '.join(unknown)}")
