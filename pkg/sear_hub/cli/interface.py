import json
import shlex
import sys
import time
from functools import wraps
from json import JSONDecodeError
from pathlib import Path
from typing import Dict, List, Optional

import prompt
from prettytable import PrettyTable

from sear_hub.agent.reinteract import LoopPolicy, StageOutcome, run_conversation
from sear_hub.agent.strategies import check_se_strategies, default_template, load_templates
from sear_hub.backends.chat import EndpointConfig, HttpChatClient, ScriptedBackend
from sear_hub.backends.personas import Persona, PersonaTarget, ReplTarget, load_personas
from sear_hub.cli.server import PipelineServer, serve_socket, serve_stream
from sear_hub.context.synthesis import synthesize_context_frame
from sear_hub.core.exceptions import (
    ArgumentError,
    AttributionError,
    BackendUnavailableError,
    ChatRequestError,
    CorpusError,
    FormatError,
    GenerationError,
    InteractionError,
    ProfileStateError,
    ProtocolError,
)
from sear_hub.core.models import (
    FaceTrack,
    Outcome,
    Segment,
    Setting,
    SocialContextFrame,
    SocialProfile,
    Speaker,
)
from sear_hub.dataset.anonymize import anonymize_file, resolve_key
from sear_hub.dataset.corpus import load_corpus
from sear_hub.dataset.session import load_session, session_frames, write_transcript
from sear_hub.infra.database import DatabaseManager
from sear_hub.infra.settings import SettingsLoader
from sear_hub.logging_config import LoggerSingleton, logger
from sear_hub.rag.embedder import MockEmbedder
from sear_hub.rag.profiles import adapt_profile, generate_profile
from sear_hub.rag.roles import build_role_database, identify_roles
from sear_hub.rag.storage import RoleDatabaseStorage
from sear_hub.survey.analytics import (
    baseline_comparison,
    build_report,
    display_mean,
    display_percent,
    load_responses,
)
from sear_hub.survey.export import export_summary
from sear_hub.survey.schema import load_schema

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_RUNTIME = 2

ARMS = ("bare", "ar-llm", "sear")
TRANSCRIPT_FILE = "transcript.ndjson"
METRICS_FILE = "metrics.json"
OPENING_TRACK = "opening"

# флаг -> (ключ конфигурации, тип значения)
FLAG_KEYS = {
    "--tau": ("ROLE_MATCH_THRESHOLD", float),
    "--dim": ("EMBEDDING_DIM", int),
    "--history-window": ("HISTORY_WINDOW", int),
    "--chat-url": ("CHAT_BASE_URL", str),
    "--chat-model": ("CHAT_MODEL", str),
}


def print_help():
    """Выводит меню помощи с использованием PrettyTable"""
    table = PrettyTable()
    table.field_names = ["Команда", "Описание", "Пример"]
    table.align = "l"

    commands = [
        ("build-roles --corpus <файл> [--out <каталог>]",
         "Собрать базу ролей из социального корпуса",
         "build-roles --corpus data/corpus.ndjson --out roles"),

        ("simulate --roles <каталог> --personas <файл> --persona <id>",
         "Прогнать диалог агента с симулированной целью",
         "simulate --roles roles --personas data/personas.json --persona jonny-neutral"),

        ("  [--templates <файл>] [--backend scripted|http] [--target persona|repl]",
         "Шаблоны, бэкенд генерации и тип цели", ""),

        ("  [--arm bare|ar-llm|sear] [--role <roleId>] [--session <файл>] [--out <каталог>]",
         "Конфигурация эксперимента и выбор роли", "simulate ... --arm ar-llm"),

        ("analyze-survey --responses <файл> [--schema <файл>] [--format json|csv]",
         "Сводная статистика анкеты",
         "analyze-survey --responses responses.ndjson --format csv"),

        ("serve --roles <каталог> [--socket HOST:PORT]",
         "Сервер протокола v1 (stdin/stdout или TCP)",
         "serve --roles roles < frames.ndjson"),

        ("anonymize --in <файл> --out <файл> [--key-env <VAR>]",
         "Псевдонимизировать набор данных",
         "anonymize --in corpus.ndjson --out anon.ndjson"),

        ("--config <файл> | --set KEY=VALUE",
         "Глобальные флаги: файл конфигурации и переопределение ключей",
         "--set ROLE_MATCH_THRESHOLD=0.5"),

        ("help", "Показать это меню", "help"),
        ("exit", "Выйти из программы", "exit"),
    ]

    for cmd, desc, example in commands:
        table.add_row([cmd, desc, example])

    print("\n" + "═" * 90)
    print("🕶️  SEAR HUB - СПРАВОЧНАЯ ИНФОРМАЦИЯ")
    print("═" * 90)
    print(table)
    print("═" * 90)


def _err(message: str) -> None:
    print(message, file=sys.stderr)


def get_arg(params: List[str], name: str, default=None) -> Optional[str]:
    """Вспомогательная функция для парсинга аргументов"""
    if name not in params:
        return default

    index = params.index(name)
    if index + 1 >= len(params):
        raise ArgumentError(name, "не указано значение")

    value = params[index + 1]
    if value.startswith("--"):
        raise ArgumentError(name, "нужно указать значение, а не другой флаг")

    return value


def get_all_args(params: List[str], name: str) -> List[str]:
    """Все значения повторяющегося флага (--set A=1 --set B=2)."""
    values = []
    for index, param in enumerate(params):
        if param == name:
            values.append(get_arg(params[index:], name))
    return values


def apply_global_flags(params: List[str]) -> None:
    """--config, затем переопределения ключей; флаги перекрывают файл один к одному."""
    config = get_arg(params, "--config")
    settings = SettingsLoader(config) if config else SettingsLoader()

    for flag, (key, cast) in FLAG_KEYS.items():
        value = get_arg(params, flag)
        if value is not None:
            try:
                settings.override(key, cast(value))
            except ValueError:
                raise ArgumentError(flag, f"ожидается значение типа {cast.__name__}")

    for assignment in get_all_args(params, "--set"):
        key, sep, raw = assignment.partition("=")
        if not sep or not key:
            raise ArgumentError("--set", "ожидается KEY=VALUE")
        try:
            value = json.loads(raw)
        except JSONDecodeError:
            value = raw
        settings.override(key.strip().upper(), value)

    LoggerSingleton().configure()


def cli_command(required_args: Optional[List[str]] = None,
                optional_args: Optional[Dict[str, any]] = None):
    """
    Декоратор для CLI-команд: разбор аргументов, вывод результата
    и перевод исключений в код возврата (0 / 1 / 2).
    """
    required_args = required_args or []
    optional_args = optional_args or {}

    def decorator(fn):
        @wraps(fn)
        def wrapper(params: List[str]) -> int:
            try:
                apply_global_flags(params)

                parsed_args = {}
                for arg in required_args:
                    value = get_arg(params, arg)
                    if value is None:
                        raise ArgumentError(arg, "отсутствует обязательный параметр")
                    parsed_args[arg.lstrip('-').replace('-', '_')] = value

                for arg, default in optional_args.items():
                    value = get_arg(params, arg, default)
                    if value is not None:
                        parsed_args[arg.lstrip('-').replace('-', '_')] = value

                result = fn(**parsed_args)
                if result:
                    print(result)
                return EXIT_OK

            except JSONDecodeError as e:
                _err(f"🚫 Ошибка формата данных: {e.msg} (строка {e.lineno})")
                return EXIT_INPUT
            except CorpusError as e:
                _err(f"📚 {e}")
                return EXIT_INPUT
            except (ArgumentError, FormatError, AttributionError, ProfileStateError) as e:
                _err(f"🚫 {e}")
                return EXIT_INPUT
            except FileNotFoundError as e:
                _err(f"📁 Файл не найден: {e.filename}")
                return EXIT_INPUT
            except (ChatRequestError, BackendUnavailableError, ProtocolError) as e:
                _err(f"🌐 Ошибка бэкенда генерации: {e}")
                _err("   Проверьте, что сервер модели запущен, или используйте --backend scripted.")
                return EXIT_RUNTIME
            except (GenerationError, InteractionError) as e:
                _err(f"💬 {e}")
                return EXIT_RUNTIME
            except ValueError as e:
                _err(f"🚫 {e}")
                return EXIT_INPUT
            except Exception as e:
                _err(f"⚠️  Неожиданная ошибка: {type(e).__name__}")
                _err(f"   Сообщение: {str(e)}")
                return EXIT_RUNTIME

        return wrapper
    return decorator


# --- build-roles ----------------------------------------------------------

@cli_command(required_args=["--corpus"], optional_args={"--out": "roles"})
def cmd_build_roles(corpus, out):
    docs = load_corpus(corpus)
    roles, store = build_role_database(docs, MockEmbedder())
    RoleDatabaseStorage(out).save(roles, store)
    facts = sum(len(r.facts) for r in roles)
    return f"roles={len(roles)} facts={facts} embeddings={len(store)}"


# --- simulate -------------------------------------------------------------

def _opening_frame(persona: Persona) -> SocialContextFrame:
    """Синтетический первый кадр: одно лицо, которое произносит вступление персоны."""
    track = FaceTrack(OPENING_TRACK, {}, "neutral")
    speech = Segment(Speaker.OTHER, persona.introduction(), 0, 1)
    return SocialContextFrame(0, 1, (track,), (speech,))


def _select_role(roles, store, role=None, session=None, persona: Optional[Persona] = None):
    """
    Роль: явно заданная, найденная по кадру сессии, единственная в базе
    или найденная по синтетическому вступительному кадру персоны.
    """
    by_id = {r.role_id: r for r in roles}
    if role is not None:
        if role not in by_id:
            raise ArgumentError("--role", f"роль '{role}' не найдена")
        return by_id[role], None

    if session is not None:
        parsed, errors = load_session(session)
        for error in errors:
            _err(f"⚠️  {session}: {error}")
        times = [c.timestamp_ms for c in parsed.cues] + [t.end_ms for t in parsed.tokens]
        end = max(times, default=0) + 1
        frame = synthesize_context_frame(parsed.cues, session_frames(parsed, Path(session).parent),
                                         parsed.tokens, (0, end))
        matches = identify_roles(store, roles, frame, MockEmbedder())
        for match in matches.values():
            if not match.is_unknown:
                return by_id[match.role_id], frame

    if len(roles) == 1:
        return roles[0], None

    if persona is not None:
        match = identify_roles(store, roles, _opening_frame(persona), MockEmbedder())
        opening = match[OPENING_TRACK]
        if not opening.is_unknown:
            return by_id[opening.role_id], None
    raise ArgumentError("--role", "роль не определена, укажите --role или --session")


def _profile_table(profile: SocialProfile) -> str:
    table = PrettyTable()
    table.field_names = ["#", "Категория", "Факт", "Оценка"]
    table.align["Факт"] = "l"
    for i, rf in enumerate(profile.ranked_facts):
        table.add_row([i, rf.fact.category.value, rf.fact.text, f"{rf.rank_score:.4f}"])
    return str(table)


def _outcomes_table(outcomes: List[StageOutcome]) -> str:
    table = PrettyTable()
    table.field_names = ["Этап", "Попыток", "Реакция"]
    for o in outcomes:
        table.add_row([o.stage, o.attempts,
                       o.last_receptiveness.value if o.last_receptiveness else "-"])
    return str(table)


def _now_ms(now: Optional[str]) -> int:
    """--now в мс эпохи; без флага - текущее время."""
    if now is None:
        return int(time.time() * 1000)
    try:
        return int(now)
    except ValueError:
        raise ArgumentError("--now", "ожидается целое число миллисекунд")


def _backend(kind: str, script: Optional[str]):
    if kind == "scripted":
        replies = DatabaseManager().load(script) if script else {}
        return ScriptedBackend.from_prompts(replies)
    if kind == "http":
        return HttpChatClient(EndpointConfig.from_settings())
    raise ArgumentError("--backend", "ожидается scripted или http")


@cli_command(
    required_args=["--roles"],
    optional_args={
        "--templates": None, "--personas": "data/personas.json", "--persona": None,
        "--backend": "scripted", "--script": None, "--target": "persona",
        "--arm": "sear", "--role": None, "--session": None, "--out": "out",
        "--now": None, "--max-retries": None,
    },
)
def cmd_simulate(roles, personas, backend, target, arm, out, templates=None, persona=None,
                 script=None, role=None, session=None, now=None, max_retries=None):
    if arm not in ARMS:
        raise ArgumentError("--arm", f"ожидается один из {ARMS}")
    now_ms = _now_ms(now)
    try:
        retries = int(max_retries) if max_retries is not None else None
    except ValueError:
        raise ArgumentError("--max-retries", "ожидается целое число")

    chosen_persona = None
    if target == "persona":
        if persona is None:
            raise ArgumentError("--persona", "нужен id персоны для --target persona")
        by_id = load_personas(personas)
        if persona not in by_id:
            raise ArgumentError("--persona", f"персона '{persona}' не найдена")
        chosen_persona = by_id[persona]
    elif target != "repl":
        raise ArgumentError("--target", "ожидается persona или repl")

    role_records, store = RoleDatabaseStorage(roles).load()
    record, frame = _select_role(role_records, store, role, session, chosen_persona)
    profile = generate_profile(record, frame.environment if frame else Setting.UNKNOWN, now_ms)
    if frame is not None:
        profile = adapt_profile(profile, frame, store, MockEmbedder(), now_ms,
                                {r.role_id: r for r in role_records})

    out_dir = Path(out)
    metrics = {"arm": arm, "roleId": record.role_id}

    if arm == "ar-llm":
        print(f"🧩 Профиль {record.role_id} ({record.pseudonym})")
        print(_profile_table(profile))
        metrics.update({"profile": profile.to_dict(), "utteranceCount": 0, "outcome": None})
        DatabaseManager().save(out_dir / METRICS_FILE, metrics)
        return f"✅ Профиль сохранён: {out_dir / METRICS_FILE}"

    if arm == "bare":
        # только цель этапа: ни ядра личности, ни фактов, ни окружения
        profile = SocialProfile(role_id=record.role_id, last_updated_ms=now_ms)

    template_list = load_templates(templates) if templates else [default_template()]
    selected, scores = check_se_strategies(template_list, profile)
    confidence = next(s.confidence for s in scores if s.template_id == selected.template_id)

    conversation_target = (PersonaTarget(chosen_persona) if chosen_persona is not None
                           else ReplTarget())

    outcomes: List[StageOutcome] = []
    policy = LoopPolicy.from_settings(retries)
    state = run_conversation(selected, profile, conversation_target,
                             _backend(backend, script), policy, outcomes)

    write_transcript(out_dir / TRANSCRIPT_FILE, state.history)
    metrics.update({
        "selectedTemplate": selected.template_id,
        "confidence": confidence,
        "scores": [s.to_dict() for s in scores],
        "stageOutcomes": [o.to_dict() for o in outcomes],
        "utteranceCount": len(state.history),
        "outcome": state.outcome.value,
    })
    DatabaseManager().save(out_dir / METRICS_FILE, metrics)
    logger.info(f"SIMULATE arm='{arm}' template_id='{selected.template_id}' "
                f"outcome='{state.outcome.value}' utterances={len(state.history)}")

    print(_outcomes_table(outcomes))
    if state.outcome is Outcome.EXHAUSTED:
        raise GenerationError("simulate", "диалог прерван ошибкой, транскрипт сохранён")
    return (f"✅ Шаблон {selected.template_id} (уверенность {confidence:.4f}), "
            f"реплик: {len(state.history)}, итог: {state.outcome.value}")


# --- analyze-survey -------------------------------------------------------

def _headline_table(report) -> str:
    table = PrettyTable()
    table.field_names = ["Вопрос", "Ответов", "Среднее", "Top-2 (4-5)"]
    table.align["Вопрос"] = "l"
    for q in report.questions:
        table.add_row([q.question_id, q.respondents, display_mean(q.mean),
                       display_percent(q.top_two if q.top_two is not None else q.yes_fraction)])
    return str(table)


@cli_command(
    required_args=["--responses"],
    optional_args={"--schema": None, "--out": None, "--format": "json"},
)
def cmd_analyze_survey(responses, format, schema=None, out=None):
    questionnaire = load_schema(schema) if schema else None
    records, rejects = load_responses(responses, questionnaire)
    report = build_report(records, questionnaire)
    path = export_summary(report, out or f"summary.{format}", format)

    total = len(records) + len(rejects)
    ratio = SettingsLoader().get("REJECT_WARNING_RATIO")
    if total == 0:
        _err("⚠️  Нет ни одного ответа, сводка пуста")
    elif len(rejects) / total > ratio:
        _err(f"⚠️  Отклонено {len(rejects)} из {total} записей:")
        for reject in rejects[:5]:
            _err(f"   {reject}")

    if not report.is_empty:
        print(_headline_table(report))
        if report.trust is not None:
            print(f"🤝 Доверие после (4-5): {display_percent(report.trust.at_least_4_after)}, "
                  f"до (5): {display_percent(report.trust.five_before)}, "
                  f"исключено: {report.trust.excluded}")
        for arm in baseline_comparison(records, questionnaire):
            if arm.counts:
                print(f"📊 {arm.question_id}: 'Very Good' {display_percent(arm.very_good)}")
    return f"✅ Сводка сохранена: {path}"


# --- serve ----------------------------------------------------------------

@cli_command(
    required_args=["--roles"],
    optional_args={"--templates": None, "--backend": "scripted", "--script": None,
                   "--socket": None, "--out": "out", "--now": None},
)
def cmd_serve(roles, backend, out, templates=None, script=None, socket=None, now=None):
    role_records, store = RoleDatabaseStorage(roles).load()
    template_list = load_templates(templates) if templates else [default_template()]
    server = PipelineServer(role_records, store, MockEmbedder(), template_list,
                            _backend(backend, script), out, now_ms=_now_ms(now))
    if socket is None:
        serve_stream(server)
        return None
    host, sep, port = socket.rpartition(":")
    if not sep or not port.isdigit():
        raise ArgumentError("--socket", "ожидается HOST:PORT")
    serve_socket(server, host or "127.0.0.1", int(port))
    return None


# --- anonymize ------------------------------------------------------------

@cli_command(required_args=["--in", "--out"], optional_args={"--key-env": None, "--names": None})
def cmd_anonymize(out, key_env=None, names=None, **kwargs):
    key = resolve_key(key_env)
    known = [n for n in (names or "").split(",") if n.strip()]
    result = anonymize_file(kwargs["in"], out, key, known)
    return f"digest={result.digest} names={result.names}"


COMMANDS = {
    "build-roles": cmd_build_roles,
    "simulate": cmd_simulate,
    "analyze-survey": cmd_analyze_survey,
    "serve": cmd_serve,
    "anonymize": cmd_anonymize,
}


def dispatch(args: List[str]) -> int:
    if not args:
        print_help()
        return EXIT_OK
    cmd, *params = args
    cmd = cmd.lower()
    if cmd == "help":
        print_help()
        return EXIT_OK
    if cmd not in COMMANDS:
        _err(f"🚫 Неизвестная команда: '{cmd}'")
        _err("   Введите 'help' для списка доступных команд.")
        return EXIT_INPUT
    return COMMANDS[cmd](params)


def cli():
    """Интерактивная оболочка: те же команды, что и в командной строке."""
    print_help()
    while True:
        try:
            user_input = prompt.string("\n🕶️  Команда > ").strip()
            if not user_input:
                continue
            if user_input.lower() == "exit":
                print("🏁 До встречи!")
                break
            try:
                args = shlex.split(user_input)
            except ValueError as e:
                print(f"🚫 Ошибка разбора команды: {e}")
                continue
            try:
                code = dispatch(args)
            finally:
                # --config и --set действуют только на одну команду
                SettingsLoader.reset()
            if code != EXIT_OK:
                print(f"↩️  Код возврата: {code}")
        except KeyboardInterrupt:
            print("\n\n⚠️  Прерывание... Для выхода введите 'exit'")
        except EOFError:
            print("\n\n🏁 Конец ввода.")
            break


def main(argv: Optional[List[str]] = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    if not args:
        cli()
        return EXIT_OK
    return dispatch(args)
