import functools
import inspect
import time as time

from sear_hub.logging_config import logger

_TRACKED = ("role_id", "template_id", "stage", "path", "question_id", "k")


def _describe(params: dict) -> str:
    parts = []
    for name in _TRACKED:
        value = params.get(name)
        if value is None:
            continue
        value = getattr(value, "name", value)
        parts.append(f"{name}='{value}'")
    for name in ("profile", "role", "template"):
        obj = params.get(name)
        for attr in ("role_id", "template_id"):
            if obj is not None and hasattr(obj, attr):
                parts.append(f"{attr}='{getattr(obj, attr)}'")
    return " ".join(parts)


def log_action(action: str):
    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            bound = inspect.signature(func).bind(*args, **kwargs)
            bound.apply_defaults()
            described = _describe(bound.arguments)

            try:
                result = func(*args, **kwargs)
                size = f" size={len(result)}" if isinstance(result, (list, dict)) else ""
                logger.info(f"{action} {described} result=OK{size}".replace("  ", " "))
                return result

            except Exception as e:
                logger.error(
                    f"{action} {described} "
                    f"result=ERROR type={type(e).__name__} message='{e}'"
                )
                raise

        return wrapper
    return decorator


def log_backend_call(source_name: str):
    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            logger.info(f"[{source_name}] Запрос генерации: старт")
            start_time = time.time()
            try:
                result = func(*args, **kwargs)
                elapsed = round((time.time() - start_time) * 1000, 2)
                logger.info(f"[{source_name}] "
                            f"Успех: получено {len(result)} символов за {elapsed} мс")
                return result
            except Exception as e:
                elapsed = round((time.time() - start_time) * 1000, 2)
                logger.error(f"[{source_name}] "
                             f"Ошибка после {elapsed} мс: {e}")
                raise
        return wrapper
    return decorator
