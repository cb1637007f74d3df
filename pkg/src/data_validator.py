from src.data_models import InstanceFile, InstanceKind, TheoremInstance
from src.utils.logger import app_logger
from pydantic import BaseModel, ValidationError
from typing import List, Dict, Any, Tuple, Optional
from datetime import datetime

class InstanceValidator:
    def __init__(self, strict: bool = False):
        self.strict = strict
        self.error_log = []
        self.warnings = []
        self.last_violation: Optional[Tuple[int, int, int]] = None

    def validate_instance_file(self, data: Dict[str, Any]) -> Tuple[bool, List[str], Optional[Tuple[InstanceFile, BaseModel]]]:
        errors = []
        name = data.get("name", "unnamed") if isinstance(data, dict) else "unnamed"
        self.last_violation = None

        try:
            # Schema validation using the Pydantic models
            instance_file = InstanceFile(**data)
            body = instance_file.parsed_body()
        except (ValidationError, TypeError, ValueError) as e:
            errors.append(f"Schema error: {str(e)}")
            self._log_errors(name, errors)
            return False, errors, None

        unknown = self._unknown_fields(instance_file, "") + self._unknown_fields(body, "body.")
        if unknown:
            message = f"Unknown fields: {', '.join(unknown)}"
            if self.strict:
                errors.append(message)
            else:
                app_logger.warning(f"{name}: {message} (ignored; use --strict to reject)")
                self.warnings.append(message)

        # Domain rules for theorem instances given inline
        if instance_file.kind == InstanceKind.THEOREM_VERIFY and getattr(body, "instance", None) is not None:
            _, rule_errors, _ = self.validate_theorem_instance(body.instance, log=False)
            errors.extend(rule_errors)

        if errors:
            self._log_errors(name, errors)
            return False, errors, None

        return True, [], (instance_file, body)

    def validate_theorem_instance(self, instance: TheoremInstance, log: bool = True) -> Tuple[bool, List[str], Optional[TheoremInstance]]:
        errors = self._apply_instance_rules(instance)
        if errors:
            if log:
                self._log_errors(instance.name, errors)
            return False, errors, None
        return True, [], instance

    def _apply_instance_rules(self, instance: TheoremInstance) -> List[str]:
        errors = []
        self.last_violation = None

        # The nontrivial case; with K >= N the left side is already H(X_1..X_N)
        if instance.K > instance.N:
            errors.append(f"K={instance.K} exceeds N={instance.N}")

        for k, sets in enumerate(instance.index_sets, start=1):
            for l, index_set in enumerate(sets, start=1):
                if not index_set:
                    errors.append(f"I_({k},{l}) is empty")
                elif any(not 1 <= i <= instance.M for i in index_set):
                    errors.append(f"I_({k},{l}) = {sorted(index_set)} is not a subset of [1, {instance.M}]")

            # a < b must give m(k, a) >= m(k, b)
            minima = [min(s) if s else None for s in sets]
            for a in range(len(minima)):
                for b in range(a + 1, len(minima)):
                    if minima[a] is not None and minima[b] is not None and minima[a] < minima[b]:
                        if self.last_violation is None:
                            self.last_violation = (k, a + 1, b + 1)
                        errors.append(f"monotone index condition violated at (k={k}, a={a + 1}, b={b + 1}): "
                                      f"m={minima[a]} < {minima[b]}")

        for key, (gamma, delta) in instance.trims.items():
            parts = key.split(",")
            if len(parts) != 4 or not all(p.strip().isdigit() for p in parts):
                errors.append(f"trim key {key!r} must look like 'k,l,i,j'")
            elif delta > gamma:
                errors.append(f"trim {key} has delta={delta} above gamma={gamma}")

        bound = instance.sampler.delta2
        for key, value in instance.fixed_coefficients.items():
            if abs(value) > bound:
                errors.append(f"fixed coefficient {key}={value} exceeds delta2={bound}")

        if instance.conditioning is not None:
            for term in instance.conditioning.terms:
                if term.source >= instance.N:
                    errors.append(f"conditioning term references source {term.source} but N={instance.N}")

        return errors

    def _unknown_fields(self, model: BaseModel, prefix: str) -> List[str]:
        found = [prefix + key for key in (model.model_extra or {})]
        for field_name in type(model).model_fields:
            value = getattr(model, field_name)
            values = value if isinstance(value, list) else [value]
            for item in values:
                if isinstance(item, BaseModel) and item.model_config.get("extra") == "allow":
                    found.extend(self._unknown_fields(item, f"{prefix}{field_name}."))
        return found

    def _log_errors(self, instance_name: str, errors: List[str]) -> None:
        for error in errors:
            app_logger.error(f"Validation error for {instance_name}: {error}")
            self.error_log.append({"instance": instance_name, "error": error, "timestamp": datetime.now().isoformat()})

    def get_error_log(self) -> List[Dict[str, Any]]:
        return self.error_log
