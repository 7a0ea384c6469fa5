class SearError(Exception):
    """Базовая ошибка пайплайна."""


class ArgumentError(SearError, ValueError):
    """Появляется при недопустимом аргументе операции."""

    def __init__(self, argument: str, reason: str):
        self.argument = argument
        self.reason = reason
        super().__init__(f"Недопустимый аргумент '{argument}': {reason}")


class AttributionError(SearError):
    """Появляется, если для токена транскрипта нет ни одного аудиокадра."""

    def __init__(self, token):
        self.token = token
        message = f"Нет аудиокадров для токена '{token.text}' "\
            f"[{token.start_ms}, {token.end_ms}] мс"
        super().__init__(message)


class CorpusError(SearError):
    """Появляется при ошибке в социальном корпусе."""

    def __init__(self, reason: str, doc_id: str | None = None, line: int | None = None):
        self.reason = reason
        self.doc_id = doc_id
        self.line = line
        where = f" (строка {line})" if line is not None else ""
        doc = f" документ '{doc_id}'" if doc_id else ""
        super().__init__(f"Ошибка корпуса{where}{doc}: {reason}")


class ProfileStateError(SearError):
    """Появляется, если профиль ссылается на неизвестную роль."""

    def __init__(self, role_id: str):
        self.role_id = role_id
        super().__init__(f"Роль '{role_id}' не найдена в базе ролей")


class GenerationError(SearError):
    """Появляется, если бэкенд не смог сгенерировать реплику."""

    def __init__(self, stage: str, reason: str):
        self.stage = stage
        self.reason = reason
        super().__init__(f"Ошибка генерации на этапе '{stage}': {reason}")


class InteractionError(SearError):
    """Появляется, если канал с целью закрыт."""

    def __init__(self, target: str, reason: str = "канал закрыт"):
        self.target = target
        self.reason = reason
        super().__init__(f"Ошибка взаимодействия с '{target}': {reason}")


class ChatRequestError(SearError):
    """Появляется при неповторяемом ответе 4xx от чат-сервиса."""

    def __init__(self, status: int, reason: str):
        self.status = status
        self.reason = reason
        super().__init__(f"Чат-сервис ответил ошибкой {status}: {reason}")


class BackendUnavailableError(SearError):
    """Появляется, когда исчерпаны все попытки обращения к чат-сервису."""

    def __init__(self, attempts: int, reason: str):
        self.attempts = attempts
        self.reason = reason
        super().__init__(f"Чат-сервис недоступен после {attempts} попыток: {reason}")


class ProtocolError(SearError):
    """Появляется при нарушении формата ответа или проводного протокола."""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(f"Ошибка протокола: {reason}")


class FormatError(SearError):
    """Появляется при повреждённом файле данных."""

    def __init__(self, path: str, reason: str, line: int | None = None):
        self.path = path
        self.reason = reason
        self.line = line
        where = f":{line}" if line is not None else ""
        super().__init__(f"Ошибка формата {path}{where}: {reason}")
